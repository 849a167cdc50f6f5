"""Serve a classifier over the extern-model line protocol.

Reads one space-separated point per line on stdin and writes the 0-based
predicted class index per line on stdout.  Used as the ``extern`` command of
generated monotone model specs and in tests of the subprocess adapter.

Modes:
    python -m xplain.serve mono-cnf <dimacs-file>   reduction classifier
    python -m xplain.serve linear <model-file>      linear threshold spec
"""

from __future__ import annotations

import sys

from .cnfsat import read_dimacs
from .frp_mono import LinearThresholdModel, load_model
from .testgen import build_mono_reduction_predictor


def _serve(predict, num_features: int) -> int:
    for raw in sys.stdin:
        line = raw.strip()
        if not line:
            continue
        values = [float(tok) for tok in line.split()]
        if len(values) != num_features:
            print(
                f"expected {num_features} values, got {len(values)}",
                file=sys.stderr,
            )
            return 1
        sys.stdout.write(f"{predict(tuple(values))}\n")
        sys.stdout.flush()
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2 or argv[0] not in ("mono-cnf", "linear"):
        print(__doc__, file=sys.stderr)
        return 2
    mode, path = argv
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    if mode == "mono-cnf":
        predict, num_features = build_mono_reduction_predictor(read_dimacs(text))
    else:
        model = load_model(text)
        if not isinstance(model, LinearThresholdModel):
            print("linear mode expects a linear model spec", file=sys.stderr)
            return 2
        predict, num_features = model.predict, model.num_features
    return _serve(predict, num_features)


if __name__ == "__main__":
    raise SystemExit(main())
