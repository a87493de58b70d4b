#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <thread>

#include "json.hpp"

#include "phishbench/detect.hpp"
#include "phishbench/errors.hpp"
#include "phishbench/png_io.hpp"

namespace phishbench {
namespace {

using Clock = std::chrono::steady_clock;

void close_fd(int& fd) noexcept {
    if (fd >= 0) ::close(fd);
    fd = -1;
}

std::string describe_status(int status) {
    if (WIFEXITED(status)) return "exited with status " + std::to_string(WEXITSTATUS(status));
    if (WIFSIGNALED(status)) return "killed by signal " + std::to_string(WTERMSIG(status));
    return "stopped";
}

std::string safe_file_name(const std::string& id) {
    std::string out;
    for (char c : id) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ? c : '_';
    return out;
}

}  // namespace

AdapterProcess::AdapterProcess(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
    ::signal(SIGPIPE, SIG_IGN);
}

AdapterProcess::~AdapterProcess() { shutdown(); }

void AdapterProcess::start() {
    int in[2], out[2];
    if (::pipe2(in, O_CLOEXEC) != 0) throw AdapterCrash(std::string("pipe: ") + std::strerror(errno));
    if (::pipe2(out, O_CLOEXEC) != 0) {
        ::close(in[0]);
        ::close(in[1]);
        throw AdapterCrash(std::string("pipe: ") + std::strerror(errno));
    }
    const pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {in[0], in[1], out[0], out[1]}) ::close(fd);
        throw AdapterCrash(std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
        // Only async-signal-safe calls until exec.
        ::dup2(in[0], 0);
        ::dup2(out[1], 1);
        const int null = ::open("/dev/null", O_WRONLY);
        if (null >= 0) ::dup2(null, 2);
        ::signal(SIGPIPE, SIG_DFL);
        ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(in[0]);
    ::close(out[1]);
    pid_ = pid;
    to_child_ = in[1];
    from_child_ = out[0];
    buffer_.clear();

    std::string hello;
    try {
        hello = read_line();
    } catch (const AdapterError& e) {
        throw AdapterCrash(std::string("adapter failed before READY: ") + e.what());
    }
    if (hello != "READY") die("adapter handshake expected READY, got '" + hello.substr(0, 80) + "'", false);
}

void AdapterProcess::shutdown() noexcept {
    if (pid_ <= 0) return;
    close_fd(to_child_);
    close_fd(from_child_);
    int status = 0;
    const auto deadline = Clock::now() + std::chrono::seconds(1);
    while (::waitpid(pid_, &status, WNOHANG) == 0) {
        if (Clock::now() > deadline) {
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, &status, 0);
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    pid_ = -1;
}

void AdapterProcess::die(const std::string& why, bool timeout) {
    std::string detail;
    if (pid_ > 0) {
        int status = 0;
        if (::waitpid(pid_, &status, WNOHANG) == pid_) {
            detail = " (" + describe_status(status) + ")";
        } else {
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, &status, 0);
        }
    }
    close_fd(to_child_);
    close_fd(from_child_);
    pid_ = -1;
    if (timeout) throw AdapterTimeout(why + detail);
    throw AdapterCrash(why + detail);
}

std::string AdapterProcess::read_line() {
    const auto deadline = Clock::now() + timeout_;
    for (;;) {
        if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
        if (left <= 0) die("adapter did not answer within " + std::to_string(timeout_.count()) + " ms", true);
        pollfd p{from_child_, POLLIN, 0};
        const int r = ::poll(&p, 1, static_cast<int>(std::min<long long>(left, 1 << 30)));
        if (r < 0) {
            if (errno == EINTR) continue;
            die(std::string("poll: ") + std::strerror(errno), false);
        }
        if (r == 0) continue;  // deadline re-checked above
        char chunk[4096];
        const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            die(std::string("read: ") + std::strerror(errno), false);
        }
        if (n == 0) die("adapter closed its output", false);
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

std::string AdapterProcess::request(const std::string& line) {
    if (pid_ <= 0) start();
    std::string msg = line + "\n";
    std::size_t off = 0;
    while (off < msg.size()) {
        const ssize_t n = ::write(to_child_, msg.data() + off, msg.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            die(std::string("write: ") + std::strerror(errno), false);
        }
        off += static_cast<std::size_t>(n);
    }
    return read_line();
}

ExternalDetector::ExternalDetector(DetectorEntry entry, const ReferenceList& refs, std::filesystem::path scratch_dir)
    : entry_(std::move(entry)), refs_(refs), scratch_(std::move(scratch_dir)) {
    entry_.validate();
    if (entry_.kind != DetectorKind::external) throw ConfigError("detector '" + entry_.id + "' is not external");
    const auto ms = std::chrono::milliseconds(static_cast<long long>(std::ceil(entry_.timeout_seconds * 1000)));
    process_ = std::make_unique<AdapterProcess>(entry_.adapter_cmd, ms);
}

ExternalDetector::~ExternalDetector() {
    process_.reset();
    if (owns_scratch_) {
        std::error_code ec;
        std::filesystem::remove_all(scratch_, ec);
    }
}

std::string ExternalDetector::request_line(const ScreenshotSample& sample, const std::filesystem::path& screenshot,
                                           const std::filesystem::path& refs_root) {
    nlohmann::ordered_json j;
    j["id"] = sample.id;
    j["screenshot"] = screenshot.string();
    j["url"] = sample.url;
    j["html"] = sample.html_path ? nlohmann::ordered_json(sample.html_path->string()) : nlohmann::ordered_json(nullptr);
    j["refs"] = refs_root.string();
    return j.dump();
}

Verdict ExternalDetector::parse_response(const std::string& line, const std::string& expected_id,
                                         const ReferenceList& refs) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
        throw ProtocolError("response is not JSON: '" + line.substr(0, 120) + "'");
    }
    if (!j.is_object()) throw ProtocolError("response is not a JSON object");
    auto field = [&](const char* name) -> const nlohmann::json& {
        if (!j.contains(name)) throw ProtocolError(std::string("response lacks '") + name + "'");
        return j[name];
    };
    const auto& id = field("id");
    if (!id.is_string() || id.get<std::string>() != expected_id)
        throw ProtocolError("response id " + id.dump() + " does not match request id '" + expected_id + "'");
    const auto& label = field("label");
    if (!label.is_string()) throw ProtocolError("label must be a string");
    Verdict v;
    try {
        v.label = parse_label(label.get<std::string>());
    } catch (const Error& e) {
        throw ProtocolError(e.what());
    }
    const auto& brand = field("brand");
    if (brand.is_string())
        v.brand = brand.get<std::string>();
    else if (!brand.is_null())
        throw ProtocolError("brand must be a string or null");
    const auto& score = field("score");
    if (!score.is_number() || !std::isfinite(score.get<double>())) throw ProtocolError("score must be a finite number");
    v.score = score.get<double>();
    if (j.contains("box") && !j["box"].is_null()) {
        const auto& box = j["box"];
        if (!box.is_array() || box.size() != 4 ||
            !std::all_of(box.begin(), box.end(), [](const nlohmann::json& x) { return x.is_number_integer(); }))
            throw ProtocolError("box must be [x, y, w, h] integers or null");
        v.box = Rect{box[0].get<int>(), box[1].get<int>(), box[2].get<int>(), box[3].get<int>()};
        if (v.box->w < 0 || v.box->h < 0) throw ProtocolError("box has negative size");
    }
    if (const auto problem = verdict_problem(v, refs)) throw ProtocolError(*problem);
    return v;
}

AdapterResponse ExternalDetector::detect(const ScreenshotSample& sample) {
    std::filesystem::path shot = sample.image_path;
    if (shot.empty() || !std::filesystem::exists(shot)) {
        if (scratch_.empty()) {
            static std::atomic<unsigned> counter{0};
            scratch_ = std::filesystem::temp_directory_path() /
                       ("phishbench-adapter-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
            owns_scratch_ = true;
        }
        std::filesystem::create_directories(scratch_);
        shot = scratch_ / (safe_file_name(sample.id) + ".png");
        write_png(shot, sample.image);
    }
    const std::string line = request_line(sample, shot, refs_.root);
    const auto start = Clock::now();
    AdapterResponse r;
    r.raw = process_->request(line);
    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    try {
        r.verdict = parse_response(r.raw, sample.id, refs_);
    } catch (const ProtocolError&) {
        // The stream may be out of step; start over on the next request.
        process_->shutdown();
        throw;
    }
    r.verdict.elapsed = elapsed;
    return r;
}

Verdict run_external_detector(const DetectorEntry& entry, const ScreenshotSample& sample, const ReferenceList& refs) {
    ExternalDetector d(entry, refs);
    return d.detect(sample).verdict;
}

}  // namespace phishbench
