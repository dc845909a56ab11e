"""Run the three bundled figure presets at toy scale.

The real presets (d = 1024, dozens of replications) are what the
acceptance tests exercise; they take minutes.  This script overrides
the simulation block so each preset finishes in seconds, then shows
what landed on disk.  Output goes to demos/out/.

The same thing from a shell:

    ridgelimits figure fig3 --theory-only --out demos/out
"""
import json
from pathlib import Path

from ridgelimits import parse_config, run_experiment

out = Path(__file__).with_name("out")

overrides = {
    "fig1": {
        "figure_params": {"phi_ratios": [1.0, 16.0], "rho_share_grid": {"min": 0.6, "max": 0.9, "count": 4}},
        "simulation": {"dim": 64, "replications": 4, "seed": 0},
    },
    "fig2": {
        "figure_params": {
            "inv_psi1_values": [1.5, 3.0, 8.0],
            "rho_ratio_grid": {"min": 1e-4, "max": 1.0, "count": 6, "scale": "log"},
            "dim_ratio_curves": 32,
            "dim_tuned": 64,
        },
        "simulation": {"replications": 4, "seed": 0},
    },
    "fig3": {
        "figure_params": {
            "curves": [[100.0, 0.05], [400.0, 0.1]],
            "gamma_grid": {"min": 1.2, "max": 6.0, "count": 13},
        },
        "simulation": {"dim": 64, "replications": 4, "seed": 0},
    },
}

for name, extra in overrides.items():
    config = parse_config(json.dumps({"mode": "figure", "figure": name, **extra}))
    paths = run_experiment(config, out / name)
    print(f"{name}:")
    for path in paths:
        print(f"  {path.relative_to(out.parent)}")
    head = paths[0].read_text().splitlines()
    print(f"  {head[0]}")
    print(f"  {head[1]}")
    print()

print("column meanings and the full-scale presets are described in the README")
