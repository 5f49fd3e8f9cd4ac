"""
Cost tables
===========

PbP, affine and sign laws side by side with the published numbers, for
every parameter set. Pass a smaller sample count for a quick look:

    python3 05_compare_baselines.py 60000
"""

import sys

from witsolve import PARAMETER_SETS
from witsolve.cli import compare_reports
from witsolve.evaluation import DEFAULT_SAMPLES, DEFAULT_SEED, LITERATURE, compare, render_text

samples = int(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT_SAMPLES

for tag, params in PARAMETER_SETS.items():
    print(f"{tag}: k={params.k}, sigma={params.sigma}, sigma_x={params.sigma_x:.6g}")
    reports = compare_reports(params, 7, samples, DEFAULT_SEED, include_bb=tag == "table3")
    print(render_text(compare(reports, LITERATURE.get(tag))))
