"""Built-in semantic sanity probes for a real encoder.

Each probe is (sentence, paraphrase, unrelated). A healthy sentence encoder
puts the paraphrase closer (cosine) than the unrelated sentence for the
overwhelming majority of probes.
"""

import numpy as np

PROBES = [
    (
        "The cat sat quietly on the warm windowsill.",
        "A cat was resting on the sunny window ledge.",
        "Quarterly revenue fell short of analyst expectations.",
    ),
    (
        "She bought fresh bread from the bakery this morning.",
        "This morning she picked up a fresh loaf at the baker's.",
        "The spacecraft entered orbit around Jupiter.",
    ),
    (
        "Heavy rain flooded the streets of the old town.",
        "Downpours left the historic city center under water.",
        "He tuned his guitar before the concert began.",
    ),
    (
        "The committee approved the new budget proposal.",
        "The board signed off on the updated spending plan.",
        "Wild horses galloped across the open plain.",
    ),
    (
        "Der Zug nach Berlin hatte zwanzig Minuten Verspätung.",
        "Der Berliner Zug kam zwanzig Minuten zu spät.",
        "La sopa estaba demasiado salada para mi gusto.",
    ),
    (
        "Los niños jugaban al fútbol en el parque.",
        "Unos chicos estaban jugando al balón en el parque.",
        "The printer ran out of toner again.",
    ),
    (
        "The museum opens at nine and closes at five.",
        "Visiting hours at the museum run from 9 am to 5 pm.",
        "Mix the flour and eggs until smooth.",
    ),
    (
        "He repaired the leaking faucet in the kitchen.",
        "He fixed the dripping tap in the kitchen.",
        "The senate debated the treaty for three days.",
    ),
    (
        "A gentle breeze moved through the olive trees.",
        "Soft wind rustled the olive grove.",
        "Her laptop crashed during the presentation.",
    ),
    (
        "The doctor advised him to rest for a week.",
        "Physicians recommended a week of rest for him.",
        "The volcano erupted after decades of silence.",
    ),
]


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


def probe_pass_rate(encode) -> float:
    """Fraction of probes where the paraphrase beats the unrelated sentence.

    ``encode`` maps a list of strings to a (n, dim) array.
    """
    flat = [s for triple in PROBES for s in triple]
    vectors = encode(flat)
    hits = 0
    for i in range(len(PROBES)):
        s, para, unrel = vectors[3 * i], vectors[3 * i + 1], vectors[3 * i + 2]
        if cosine(s, para) > cosine(s, unrel):
            hits += 1
    return hits / len(PROBES)
