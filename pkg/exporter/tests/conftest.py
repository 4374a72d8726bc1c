import pytest

HEADER = "instance_id\tlemma\tlanguage\tcontext1\ttarget_index1\tcontext2\ttarget_index2"

SENTENCES = [
    "The river bank was covered in moss.",
    "She deposited the check at the bank.",
    "A cold wind swept across the square.",
    "The lecture covered medieval trade routes.",
    "He planted tomatoes behind the house.",
    "The orchestra rehearsed the final movement.",
    "Fog rolled in from the harbor at dusk.",
    "The engineers reviewed the bridge design.",
    "Apples were piled high at the market stall.",
    "The library extended its evening hours.",
]


def write_instances(path, n=5, duplicate_context=False):
    """n instances = 2n contexts drawn from the probe sentences."""
    rows = [HEADER]
    for i in range(n):
        c1 = SENTENCES[(2 * i) % len(SENTENCES)]
        c2 = SENTENCES[(2 * i + 1) % len(SENTENCES)]
        if duplicate_context and i == n - 1:
            c2 = SENTENCES[0]  # reuse a sentence that instance 0 also has
        rows.append(f"w{i:02d}\tlemma\ten\t{c1}\t0\t{c2}\t0")
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return str(path)


@pytest.fixture
def instances_file(tmp_path):
    return write_instances(tmp_path / "instances.tsv")
