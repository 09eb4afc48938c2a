"""Brute-force reference matcher: tests every pattern against every sentence
in isolation with naive scans.  Kept deliberately independent of the engine's
indexing and search order; shares only the lexicon and processed sentences."""

from itertools import product

from lptriage.lexicon import POS


def _lemma_seq_occurrences(lemmas, needle_words):
    n = len(needle_words)
    out = []
    for i in range(len(lemmas) - n + 1):
        if list(lemmas[i:i + n]) == list(needle_words):
            out.append((i, i + n))
    return out


def _slot_occurrences(sentence, slot, lexicon):
    """All (start, end) token ranges satisfying a slot, via naive scans."""
    out = []
    poses = [slot.pos] if slot.pos else list(POS)
    for i, tok in enumerate(sentence.tokens):
        for pos in poses:
            if tok.pos != pos:
                continue
            if slot.category in lexicon.categorize(tok.lemma, pos):
                if slot.lemmas is None or tok.lemma in slot.lemmas:
                    out.append((i, i + 1))
    # multi-word lexicon entries of the slot's category
    category = lexicon.categories[slot.category]
    lemmas = [t.lemma for t in sentence.tokens]
    for entry in category.entries:
        words = entry.split(" ")
        if len(words) < 2:
            continue
        if slot.pos is not None and not category.admits(slot.pos):
            continue
        if slot.lemmas is not None and entry not in slot.lemmas:
            continue
        out.extend(_lemma_seq_occurrences(lemmas, words))
    return sorted(set(out))


def brute_word_hits(sentence, pattern):
    """(sentence_index, span) per keyword occurrence."""
    lemmas = [t.lemma for t in sentence.tokens]
    spans = [t.span for t in sentence.tokens]
    hits = []
    for start, end in _lemma_seq_occurrences(lemmas, pattern.lemmas):
        hits.append((sentence.index, (spans[start][0], spans[end - 1][1])))
    return hits


def brute_phrase_match(sentence, template, lexicon) -> bool:
    """Any assignment of disjoint occurrences, in any order, within the gap."""
    occ_lists = [_slot_occurrences(sentence, s, lexicon) for s in template.slots]
    for assignment in product(*occ_lists):
        ranges = sorted(assignment)
        if any(b[0] < a[1] for a, b in zip(ranges, ranges[1:])):
            continue
        if len(set(assignment)) < len(assignment):
            continue
        if all(b[0] - a[1] <= template.max_gap for a, b in zip(ranges, ranges[1:])):
            return True
    return False


def brute_sentence_match(sentence, template, lexicon):
    """None if no match, else the neg_dominated flag."""
    if template.is_action and sentence.text.rstrip().endswith("?"):
        return None
    witnesses = []
    for slot in template.required:
        occ = _slot_occurrences(sentence, slot, lexicon)
        if not occ:
            return None
        witnesses.append((slot, occ))
    for slot in template.forbidden:
        if _slot_occurrences(sentence, slot, lexicon):
            return None
    governing = next((w for w in witnesses if w[0].pos == POS.VERB), witnesses[0])
    neg_positions = [
        i for i, tok in enumerate(sentence.tokens)
        if "NEG" in lexicon.categorize(tok.lemma, tok.pos)
    ]
    def negated(pos):
        return any(pos - 2 <= n < pos for n in neg_positions)
    return all(negated(start) for start, _ in governing[1])


def brute_br_hits(sentence_hits, pattern_set):
    """Set of bug-report template ids from (se_template_id, neg_dominated) hits."""
    topics = {t.id: t.topic for t in pattern_set.sentence_templates}
    fired = set()
    for tpl in pattern_set.bug_report_templates:
        n = sum(
            1 for se_id, dominated in sentence_hits
            if not dominated and topics[se_id] in tpl.contributing_topics
        )
        if n >= tpl.min_sentence_matches:
            fired.add(tpl.id)
    return fired


def brute_match_report(sentences, lexicon, pattern_set):
    """Hit sets per level: word multiset, phrase/sentence sets, br set."""
    word = []
    phrase = set()
    sent_hits = []
    for sentence in sentences:
        for pat in pattern_set.word_patterns:
            for idx, span in brute_word_hits(sentence, pat):
                word.append((pat.id, idx, span))
        for tpl in pattern_set.phrase_templates:
            if brute_phrase_match(sentence, tpl, lexicon):
                phrase.add((tpl.id, sentence.index))
        for tpl in pattern_set.sentence_templates:
            res = brute_sentence_match(sentence, tpl, lexicon)
            if res is not None:
                sent_hits.append((tpl.id, sentence.index, res))
    br = brute_br_hits([(pid, dom) for pid, _idx, dom in sent_hits], pattern_set)
    return sorted(word), phrase, set(sent_hits), br
