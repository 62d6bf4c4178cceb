#!/usr/bin/env python3
"""Metric reports from raw confusion matrices, full precision and 2-decimal.

Also demonstrates the class-swap symmetry and the 0/0 conventions used for
degenerate tallies.
"""

from icl_xray import ConfusionMatrix, report

EXAMPLES = [
    ("balanced zero-shot run", ConfusionMatrix(tp=20, fp=4, fn=6, tn=16)),
    ("precision-heavy run", ConfusionMatrix(tp=16, fp=0, fn=10, tn=20)),
    ("strong 6-shot grid run", ConfusionMatrix(tp=20, fp=1, fn=6, tn=19)),
    ("single-class truth", ConfusionMatrix(tp=0, fp=0, fn=0, tn=46)),
]


def main() -> None:
    for title, matrix in EXAMPLES:
        r = report(matrix, positive_name="COVID", negative_name="Normal")
        print("=" * 60)
        print(f"{title}: tp={matrix.tp} fp={matrix.fp} fn={matrix.fn} tn={matrix.tn}")
        print(r.to_text())

    print("=" * 60)
    matrix = ConfusionMatrix(tp=20, fp=4, fn=6, tn=16)
    direct = report(matrix)
    flipped = report(matrix.swapped())
    print("class-swap symmetry:")
    print(f"  direct positive block : {direct.positive}")
    print(f"  swapped negative block: {flipped.negative}")
    print(f"  accuracies equal      : {direct.accuracy == flipped.accuracy}")


if __name__ == "__main__":
    main()
