// Reference adapter for the detector wire protocol. Answers every request
// without looking at the screenshot; flags make it misbehave on purpose.
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Echo adapter for the phishbench detector protocol"};
    std::string brand;
    std::uint64_t crash_every = 0;
    int sleep_ms = 0;
    bool echo = false, garbage = false, no_ready = false;
    app.add_option("--brand", brand, "answer phishing with this brand (benign when empty)");
    app.add_option("--crash-every", crash_every, "exit with status 3 on every Nth request");
    app.add_option("--sleep-ms", sleep_ms, "delay before each answer");
    app.add_flag("--echo", echo, "score = checksum of the request url modulo 1000003");
    app.add_flag("--garbage", garbage, "answer with a non-JSON line");
    app.add_flag("--no-ready", no_ready, "skip the READY handshake");
    CLI11_PARSE(app, argc, argv);

    std::ios::sync_with_stdio(false);
    if (!no_ready) std::cout << "READY" << std::endl;
    std::string line;
    std::uint64_t served = 0;
    while (std::getline(std::cin, line)) {
        ++served;
        if (crash_every && served % crash_every == 0) std::_Exit(3);
        if (sleep_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));
        if (garbage) {
            std::cout << "not json" << std::endl;
            continue;
        }
        nlohmann::json req;
        try {
            req = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            std::cout << R"({"id":null,"label":"benign","brand":null,"score":0,"box":null})" << std::endl;
            continue;
        }
        nlohmann::ordered_json resp;
        resp["id"] = req.value("id", "");
        resp["label"] = brand.empty() ? "benign" : "phishing";
        resp["brand"] = brand.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(brand);
        resp["score"] = echo ? static_cast<double>(fnv1a(req.value("url", "")) % 1000003) : 0.0;
        resp["box"] = nullptr;
        std::cout << resp.dump() << std::endl;
    }
    return 0;
}
