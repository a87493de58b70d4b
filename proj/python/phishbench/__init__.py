"""Python bindings for the phishbench C++ core."""

from ._phishbench import (
    Error,
    ParseError,
    ShapeError,
    ValidationError,
    attack,
    compute_rates,
    emd_similarity,
    manipulate,
    parse_registrable,
    phash,
    psnr,
    read_png,
    report,
    ssim,
    synth_corpus,
    typosquats,
    verify_brand_domain,
    write_png,
)

__version__ = "0.1.0"
