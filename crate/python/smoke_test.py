#!/usr/bin/env python3
"""Smoke test for the g2paug_py extension module.

Build the extension first:

    cargo build -p g2paug-py --release

The script finds the compiled cdylib under target/, loads it, and runs a
few end-to-end checks.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libg2paug_py.so", "libg2paug_py.dylib", "g2paug_py.dll")
    ]
    lib = next((p for p in candidates if p.exists()), None)
    if lib is None:
        sys.exit("extension not built; run: cargo build -p g2paug-py --release")
    tmp = Path(tempfile.mkdtemp())
    suffix = ".pyd" if lib.suffix == ".dll" else ".so"
    shutil.copy(lib, tmp / f"g2paug_py{suffix}")
    sys.path.insert(0, str(tmp))
    import g2paug_py

    return g2paug_py


def main():
    m = load_module()

    assert m.tokenize("I will read.") == ["I", "will", "read", "."]
    assert m.tokenize("") == []

    # 3-4-5 triangle
    dist = m.l2_distance_matrix([[0.0, 0.0]], [[3.0, 4.0]])
    assert dist == [[5.0]]

    # two legal alignments, costs 0.3 and 1.1
    path = m.viterbi_align([[0.1, 0.9, 0.9], [0.9, 0.1, 0.1]])
    assert path == [0, 1, 1], path

    soft = m.soft_alignment([[1.0], [2.0]])
    assert abs(soft[0][0] - 0.7311) < 1e-4
    assert abs(sum(col[0] for col in soft) - 1.0) < 1e-9

    avg = m.avg_span_distance(
        [[1.0, 3.0, 9.0], [9.0, 9.0, 2.0]], [0, 0, 1], 0, 2
    )
    assert avg == 2.0, avg

    conf = m.confidence_score(403.3, 452.9)
    assert abs(conf - 0.116) < 5e-4, conf

    lexicon = m.PronLexicon.from_text("I  ai\nWILL  w i l\n")
    assert lexicon.lookup("i") == [["ai"]]
    inventory = m.HeteronymInventory.from_text(
        "read\tread_present\tr i d\nread\tread_past\tr e d\n"
    )
    assert inventory.forms("read") == ["read_present", "read_past"]

    # orthogonal toy encodings; frames spell out the present-tense form
    symbols = ["ai", "w", "i", "l", "r", "e", "d"]
    dim = len(symbols)
    table_lines = [f"dim {dim}"]
    vectors = {}
    for k, s in enumerate(symbols):
        vec = [0.0] * dim
        vec[k] = 1.0
        vectors[s] = vec
        table_lines.append(s + " " + " ".join(str(v) for v in vec))
    frames = []
    for s in ["ai", "w", "i", "l", "r", "i", "d"]:
        frames.extend([vectors[s]] * 2)
    slots = m.disambiguate(
        "I will read", lexicon, inventory, "\n".join(table_lines), frames
    )
    assert len(slots) == 1
    slot = slots[0]
    assert slot.word == "read"
    assert slot.chosen_form == "read_present", slot.chosen_form
    marginals = dict(slot.marginals)
    assert marginals["read_present"] == 0.0
    assert marginals["read_past"] > 0.0
    assert 0.0 < slot.confidence <= 2.0
    assert not math.isnan(slot.confidence)

    print("smoke test passed")


if __name__ == "__main__":
    main()
