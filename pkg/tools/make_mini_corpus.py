#!/usr/bin/env python3
"""Regenerate the bundled mini corpus (300 reports at 5% positive prevalence).

Writes src/lptriage/data/mini_corpus.jsonl and mini_corpus_sentence_labels.jsonl.
Deterministic: fixed seed, fixed pools.  The positives are hand-written to
exercise all four matching levels (including one keyword-free report and one
report that only the word/phrase levels can reach); the negatives mix mundane
reports with keyword-bait ones so the level precisions spread out the way a
real tracker behaves.
"""

import itertools
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from lptriage.corpus import (  # noqa: E402
    Dataset,
    IssueReport,
    Label,
    SentenceLabel,
    Source,
    save_dataset,
    save_sentence_labels,
)
from lptriage.lexicon import load_lexicon  # noqa: E402
from lptriage.patterns import load_pattern_set, match_report  # noqa: E402
from lptriage.textproc import process_report, segment_sentences  # noqa: E402

SEED = 20240501
OUT_DIR = Path(__file__).resolve().parents[1] / "src" / "lptriage" / "data"
PROJECTS = ["stormdb", "relaygw", "queuekit", "webshell", "metricsd", "authsvc"]

# Each positive: (title, [(sentence, concurrency_related)], title_is_concurrency)
POSITIVES = [
    ("Deadlock when two writers flush at the same time",
     [("Both workers try to acquire the same write lock.", True),
      ("The system hangs when it tries to acquire the lock.", True),
      ("The deadlock shows up again after roughly an hour.", True),
      ("We saw this on version 2.3.1 with the default settings.", False)],
     True),
    ("Worker thread hangs after the first batch",
     [("The consumer thread hangs right after it polls the queue.", True),
      ("The thread hangs forever once the broker drops the link.", True),
      ("It never recovers until we restart the service.", True),
      ("Logs from the staging box are attached below.", False)],
     True),
    ("Race condition between cache refresh and eviction",
     [("There is a race condition between the refresh task and the eviction path.", True),
      ("The refresh thread and the eviction thread update the same entry with no coordination.", True),
      ("Concurrent threads corrupt the shared map during eviction.", True),
      ("Reproduced on the nightly build from Monday.", False)],
     True),
    ("Counter drops updates under load",
     [("The increment is not atomic when two threads update the counter.", True),
      ("Under load the counter ends up short by a few hundred.", False),
      ("A single-threaded run never loses a count.", True),
      ("Looks like classic lock inversion to me.", True)],
     False),
    ("Session registry corrupted under load",
     [("Access to the shared thread registry is not synchronized.", True),
      ("The thread pool is the problem, not the store.", True),
      ("Only the readlock path is affected.", True),
      ("After a burst of logins the registry contains duplicate sessions.", False)],
     True),
    ("Retry storm starves the writer",
     [("The writer thread starves while the readers loop forever.", True),
      ("We suspect starvation in the fair queue.", True),
      ("Bumping the retry delay hides it but does not cure it.", False)],
     True),
    ("Mutex never released on the error path",
     [("The mutex is never released when the handler throws.", True),
      ("Every other thread then blocks on the same mutex.", True),
      ("A heap dump from production is attached.", False)],
     True),
    ("Workers deadlock inside ReentrantLock.lock()",
     [("Each worker thread throws an InterruptedException during shutdown.", True),
      ("The dump shows two threads deadlocked on the same lock.", True),
      ("The deadlock starts when both sides wait on each other.", True),
      ("We run the stock configuration for the pool sizes.", False)],
     True),
    ("Transaction commits overwrite each other",
     [("Two transactions overwrite the same row when they commit simultaneously.", True),
      ("This is a data race between the two commit paths.", True),
      ("A dirty read appears in the summary row.", True),
      ("Single commits are fine.", False)],
     True),
    ("Stale value returned from cache getAsync",
     [("When getAsync() and setAsync() run at the same time, the future resolves with the previous value.", True),
      ("The two methods do not coordinate their updates, so the cached entry is overwritten with old data.", True),
      ("A second call a moment later returns the right value.", False)],
     True),
    ("Semaphore permits exhausted during reconnect",
     [("The semaphore is held forever after a timeout on the socket.", True),
      ("New connections then starve because the permits are gone.", True),
      ("This livelock repeats on every reconnect storm.", True),
      ("The latch count is off by one after the storm.", True)],
     True),
    ("Severe lock contention on the metadata lock",
     [("Every request waits on the same lock, and throughput drops.", True),
      ("The lock contention grows with the number of clients.", True),
      ("Profiles show most wall time inside the metadata section.", False)],
     True),
    ("Thread pool stuck after a burst of jobs",
     [("All threads remain stuck indefinitely in the pool.", True),
      ("We found a thread leak in the bulkhead wrapper.", True),
      ("The pool monitor is gone after failover.", True),
      ("The barrier never opens for the second group.", True),
      ("The queue keeps growing and nothing drains it.", False)],
     True),
    ("Race in the shutdown path skips the last flush",
     [("During shutdown the race makes the last flush skip.", True),
      ("A stale read follows every such shutdown.", True),
      ("Data written in the final second is gone after restart.", False)],
     True),
    ("Writelock acquired twice freezes the flush",
     [("The writelock is acquired twice and the flush freezes.", True),
      ("The writelock is the real bug here.", True),
      ("Only a restart clears the state.", False)],
     True),
]

# Mundane negatives: no CBG/CME vocabulary at all.
MUNDANE_COMPONENTS = [
    "settings page", "export dialog", "search bar", "login form", "billing view",
    "profile screen", "dashboard chart", "notification panel", "upload widget",
    "sidebar menu", "report footer", "audit view", "theme picker", "help popup",
]
MUNDANE_TEMPLATES = [
    "The {c} shows a blank panel when the window is resized.",
    "Opening the {c} twice in a row crashes the app.",
    "The {c} does not remember the last filter after a restart.",
    "Scrolling inside the {c} is very slow on large datasets.",
    "The {c} renders overlapping labels in the French localization.",
    "Clicking save in the {c} silently discards the changes.",
    "The {c} keeps the spinner visible even after the data arrives.",
    "Keyboard navigation skips every other field in the {c}.",
    "The {c} truncates long names instead of wrapping them.",
    "Dark mode colors are unreadable in the {c}.",
    "The {c} logs a warning about a deprecated setting on startup.",
    "Resizing the browser hides the buttons of the {c}.",
    "The {c} exports dates in the wrong timezone.",
    "An empty state message is missing from the {c}.",
]
MUNDANE_EXTRA_BODIES = [
    "Reproduced on version {v} with a clean profile.",
    "This started after the {v} upgrade.",
    "A screenshot is attached to this report.",
    "It happens on both staging and production.",
    "Clearing the cache does not help.",
    "No errors appear in the console while this happens.",
]

# Keyword-bait negatives: word-level hits only.
WORD_BAIT = [
    ("Lock icon invisible on the login screen", "The login screen shows the lock icon only after a refresh."),
    ("Account locked after three attempts", "My account is locked after three wrong attempts and the email never arrives."),
    ("Screen lock wallpaper resets", "After every update the screen lock wallpaper resets to the default image."),
    ("Lock orientation toggle does nothing", "The lock orientation toggle in the quick settings does nothing on tablets."),
    ("Comment thread collapses while scrolling", "The comment thread collapses whenever I scroll past an image."),
    ("Email thread view mangles quoted replies", "The email thread view mangles quoted formatting from older replies."),
    ("Forum thread pagination broken", "Page two of a long forum thread contains the posts from page one."),
    ("Race leaderboard does not refresh", "The race leaderboard keeps yesterday's standings until a hard reload."),
    ("Race results export leaves out riders", "The race results export leaves out riders who finished after sunset."),
    ("Billing transaction shows wrong amount", "The billing transaction for March shows the wrong currency symbol."),
    ("Transaction history page loads twice", "The transaction history page loads twice when opened from the email link."),
    ("Transaction receipt email is blank", "The transaction receipt email arrives with an empty body."),
    ("Caps lock warning stays visible", "The caps lock warning stays on the screen long after typing ends."),
    ("Vault lock delay setting ignored", "The vault lock delay setting is ignored and resets to one minute."),
    ("Thread of replies renders out of order", "A thread of replies renders out of order when emojis are involved."),
    ("Smart lock pairing broken on first boot", "Smart lock pairing with the watch does not complete on the first boot of the day."),
    ("Sprint race mode drains battery", "Sprint race mode in the fitness tracker drains the battery in an hour."),
    ("Lock screen widget overlaps the clock", "The lock screen widget overlaps the clock when notifications pile up."),
]

# Phrase-bait negatives: CME noun co-occurring with POP/PSY/SYB words in a
# benign setting ("transaction" is the safe CME noun no SE template claims).
PHRASE_BAIT = [
    ("Checkout transaction requires a signed token", "The checkout transaction requires a signed token even for guests."),
    ("Card renewal transaction fails silently", "The renewal transaction fails when the card has expired."),
    ("Transaction log shows an error after renewal", "The transaction log shows an error entry after every renewal."),
    ("Refund transaction stalls in review", "A refund transaction stalls in the review queue over the weekend."),
    ("Transaction summary duplicates a problem entry", "The transaction summary duplicates the problem entry from last month."),
    ("Gift card transaction expires too early", "A gift card transaction expires before the printed date."),
    ("Transaction search drops the first result", "The transaction search drops the first result on every page."),
    ("Imported transaction requires manual review", "Every imported transaction requires a manual review click."),
]

# Sentence-level bait.  The first five pair a CME noun with an exception name
# and nothing else, so only the topic-less exception template fires (no
# report-level cascade); the last three are genuine report-level bait.
SENTENCE_BAIT = [
    ("Transaction import logs a NullPointerException on empty mapping",
     "Each imported transaction logs a NullPointerException when the mapping file is empty."),
    ("Transaction viewer reports a TimeoutException on big files",
     "The transaction viewer reports a TimeoutException when the file is larger than 50 MB."),
    ("Transaction badge prints an ExecutionException in demo mode",
     "The transaction badge prints an ExecutionException in the offline demo mode."),
    ("Transaction export shows an OutOfMemoryError on archives",
     "The transaction export page shows an OutOfMemoryError for archives over a gigabyte."),
    ("Transaction sync tool displays a CancellationException",
     "The transaction sync tool displays a CancellationException after the nightly window."),
    ("Screen lock freezes the music player",
     "The screen lock freezes the music player until the phone is unplugged."),
    ("Comment thread loops forever on one emoji",
     "The comment thread loops forever while rendering a single broken emoji."),
    ("Race results page shows an error for some riders",
     "The race results page shows an error banner for riders who share a name."),
]


def build_reports():
    rng = random.Random(SEED)
    reports = []
    labels = []

    def add(title, body_sentences, label, sent_flags=None):
        idx = len(reports)
        rid = f"MC-{idx + 1:04d}"
        body = " ".join(s for s, _f in body_sentences) if sent_flags is None else \
            " ".join(s for s in body_sentences)
        project = PROJECTS[idx % len(PROJECTS)]
        month = 1 + idx % 12
        day = 1 + idx % 27
        created = f"2023-{month:02d}-{day:02d}T{idx % 24:02d}:15:00Z"
        reports.append(
            IssueReport(rid, project, title, body, label, Source.SYNTHETIC, created)
        )
        return rid

    # positives
    for title, sents, title_conc in POSITIVES:
        rid = add(title, sents, Label.CONCURRENCY)
        seg = segment_sentences(title, " ".join(s for s, _ in sents))
        expected = [title] + [s for s, _ in sents]
        assert seg == expected, f"segmentation drift for {rid}: {seg}"
        flags = [title_conc] + [f for _, f in sents]
        for i, flag in enumerate(flags):
            labels.append(SentenceLabel(rid, i, flag))

    # negatives: mundane
    mundane = []
    for tpl, comp in itertools.product(MUNDANE_TEMPLATES, MUNDANE_COMPONENTS):
        mundane.append((tpl.format(c=comp), comp))
    rng.shuffle(mundane)
    versions = ["1.8", "2.0", "2.3", "3.1", "4.0", "5.2"]
    n_mundane = 285 - len(WORD_BAIT) * 4 - len(PHRASE_BAIT) * 2 - len(SENTENCE_BAIT)
    for i in range(n_mundane):
        sentence, comp = mundane[i]
        title = sentence.rstrip(".")
        extra = MUNDANE_EXTRA_BODIES[i % len(MUNDANE_EXTRA_BODIES)].format(
            v=versions[i % len(versions)]
        )
        add(title, [sentence, extra], Label.NON_CONCURRENCY, sent_flags=True)

    # negatives: word bait (4 variants each)
    suffixes = [
        "It happens on every device we tried.",
        "Restarting does not change anything.",
        "This worked fine in the previous release.",
        "Support asked me to file it here.",
    ]
    for (title, body), suffix in itertools.product(WORD_BAIT, suffixes):
        add(title, [body, suffix], Label.NON_CONCURRENCY, sent_flags=True)
    for (title, body), suffix in itertools.product(PHRASE_BAIT, suffixes[:2]):
        add(title, [body, suffix], Label.NON_CONCURRENCY, sent_flags=True)
    for title, body in SENTENCE_BAIT:
        add(title, [body], Label.NON_CONCURRENCY, sent_flags=True)

    assert len(reports) == 300, len(reports)
    return Dataset(reports, labels)


def sanity_check(dataset):
    lex = load_lexicon()
    ps = load_pattern_set()
    by_level = {"word": 0, "phrase": 0, "sentence": 0, "br": 0}
    fp = {"word": 0, "phrase": 0, "sentence": 0, "br": 0}
    for report in dataset:
        sents = process_report(report, lex)
        mr = match_report(sents, lex, ps, report_text=report.text)
        flags = {
            "word": bool(mr.word_hits),
            "phrase": bool(mr.phrase_hits),
            "sentence": bool(mr.sentence_hits),
            "br": bool(mr.br_hits),
        }
        for lvl, hit in flags.items():
            if hit and report.label == Label.CONCURRENCY:
                by_level[lvl] += 1
            if hit and report.label == Label.NON_CONCURRENCY:
                fp[lvl] += 1
    pos = dataset.count_label(Label.CONCURRENCY)
    print(f"positives={pos}")
    for lvl in by_level:
        tp, fpp = by_level[lvl], fp[lvl]
        prec = tp / (tp + fpp) if tp + fpp else 0.0
        print(f"{lvl:9s} tp={tp:3d} fp={fpp:3d} precision={prec:.3f} recall={tp / pos:.3f}")


def main():
    dataset = build_reports()
    save_dataset(dataset, OUT_DIR / "mini_corpus.jsonl")
    save_sentence_labels(dataset.sentence_labels, OUT_DIR / "mini_corpus_sentence_labels.jsonl")
    print(f"wrote {len(dataset)} reports to {OUT_DIR}")
    sanity_check(dataset)


if __name__ == "__main__":
    main()
