import httpx

from argmine.corpus import GoldSpan, LoadReport
from argmine.labels import ArgType, QualityLabel
from argmine.spelling import HttpNormalizer, identity_normalizer, normalize_essay


def span(essay_id, index, start, end):
    return GoldSpan(essay_id, index, start, end, ArgType.CLAIM, QualityLabel.ADEQUATE)


def test_identity_normalizer_keeps_everything():
    raw = "we have descovered yet nothing"
    gold = (span("e", 0, 0, 3), span("e", 1, 3, 5))
    annotated = normalize_essay("e", raw, identity_normalizer, gold)
    assert annotated.essay.normalized_text == raw
    assert [(s.start_token, s.end_token) for s in annotated.spans] == [(0, 3), (3, 5)]


def test_correction_inside_span_keeps_coverage():
    raw = "there is no life on Mars that we have descovered yet"
    fix = lambda text: text.replace("descovered", "discovered")
    gold = (span("e", 0, 0, len(raw.split())),)
    annotated = normalize_essay("e", raw, fix, gold)
    assert "discovered" in annotated.essay.normalized_text
    (projected,) = annotated.spans
    assert (projected.start_token, projected.end_token) == (0, annotated.essay.token_count)


def test_word_splitting_correction_shifts_indices():
    # "alot" -> "a lot" adds one token before the second span.
    raw = "i like it alot because fun things happen"
    fix = lambda text: text.replace("alot", "a lot")
    gold = (span("e", 0, 0, 4), span("e", 1, 4, 8))
    annotated = normalize_essay("e", raw, fix, gold)
    tokens = [t.text for t in annotated.essay.tokens]
    assert tokens[:5] == ["i", "like", "it", "a", "lot"]
    first, second = annotated.spans
    # Alignment oracle: the boundary between spans sat after "alot" (token 4);
    # in the corrected text that boundary is after "lot" (token 5).
    assert (first.start_token, first.end_token) == (0, 5)
    assert (second.start_token, second.end_token) == (5, 9)


def test_normalizer_deleting_span_flags_degenerate():
    raw = "keep this part DELETEME and this part"
    fix = lambda text: text.replace(" DELETEME", "")
    gold = (span("e", 0, 0, 3), span("e", 1, 3, 4), span("e", 2, 4, 7))
    report = LoadReport()
    annotated = normalize_essay("e", raw, fix, gold, report)
    assert len(annotated.spans) == 2
    assert report.degenerate_spans == [("e", 1)]
    assert report.warnings
    # Remaining spans re-indexed and still valid.
    assert [s.index for s in annotated.spans] == [0, 1]


def test_normalizer_failure_falls_back_to_identity():
    def broken(text):
        raise RuntimeError("service down")

    raw = "some essay text here"
    gold = (span("e", 0, 0, 4),)
    report = LoadReport()
    annotated = normalize_essay("e", raw, broken, gold, report)
    assert annotated.essay.normalized_text == raw
    assert any("normalizer failed" in w for w in report.warnings)
    assert len(annotated.spans) == 1


def test_http_normalizer_plain_text_contract():
    def handler(request: httpx.Request) -> httpx.Response:
        assert request.headers["content-type"].startswith("text/plain")
        corrected = request.content.decode("utf-8").replace("teh", "the")
        return httpx.Response(200, text=corrected)

    normalizer = HttpNormalizer("http://spell/fix", transport=httpx.MockTransport(handler))
    assert normalizer("teh essay") == "the essay"


def test_http_normalizer_error_propagates_to_fallback():
    normalizer = HttpNormalizer(
        "http://spell/fix",
        transport=httpx.MockTransport(lambda request: httpx.Response(503)),
    )
    report = LoadReport()
    annotated = normalize_essay("e", "raw text stays", normalizer, (), report)
    assert annotated.essay.normalized_text == "raw text stays"
    assert report.warnings


def test_span_count_preserved_unless_degenerate():
    raw = " ".join(f"w{i}" for i in range(30))
    fix = lambda text: text.replace("w7", "seven").replace("w20", "twenty twenty")
    gold = tuple(span("e", i, i * 5, (i + 1) * 5) for i in range(6))
    annotated = normalize_essay("e", raw, fix, gold)
    assert len(annotated.spans) == 6
    # Spans stay disjoint and ordered after projection.
    prev = 0
    for s in annotated.spans:
        assert prev <= s.start_token < s.end_token
        prev = s.end_token
