"""Seeded random issue-report generator for property and oracle tests."""

import random

from lptriage.corpus import Dataset, IssueReport, Label, Source

CME = ["lock", "thread", "mutex", "semaphore", "transaction", "writelock"]
CBG = ["deadlock", "race condition", "race", "livelock", "starvation", "data race"]
CTR = ["concurrent", "synchronization", "atomic", "parallel", "synchronized"]
POP = ["acquire", "release", "hold", "wait", "update", "write", "access", "notify"]
PSY = ["hangs", "freezes", "blocks", "starves", "crashed", "stalls", "loops"]
AOT = ["forever", "again", "intermittently", "twice", "always"]
SYB = ["bug", "error", "problem", "failure", "issue"]
NEG = ["not", "never", "no"]
EXC = ["InterruptedException", "TimeoutException", "NullPointerException"]
FILLER = [
    "the", "a", "system", "service", "request", "cache", "user", "file", "page",
    "server", "job", "queue", "handler", "when", "after", "it", "slowly", "big",
]

POOLS = [CME, CBG, CTR, POP, PSY, AOT, SYB, NEG, EXC, FILLER, FILLER, FILLER]


def random_sentence(rng: random.Random) -> str:
    words = []
    for _ in range(rng.randint(4, 12)):
        pool = rng.choice(POOLS)
        words.append(rng.choice(pool))
    text = " ".join(words)
    text = text[0].upper() + text[1:]
    return text + ("?" if rng.random() < 0.1 else ".")

def random_report(rng: random.Random, rid: str, max_body: int = 3) -> IssueReport:
    title = random_sentence(rng).rstrip(".?")
    body = " ".join(random_sentence(rng) for _ in range(rng.randint(0, max_body)))
    label = Label.CONCURRENCY if rng.random() < 0.3 else Label.NON_CONCURRENCY
    return IssueReport(rid, f"proj{rng.randint(0, 3)}", title, body, label, Source.SYNTHETIC)


def random_dataset(seed: int, n_reports: int, max_body: int = 3) -> Dataset:
    rng = random.Random(seed)
    return Dataset([random_report(rng, f"SYN-{i:04d}", max_body) for i in range(n_reports)])
