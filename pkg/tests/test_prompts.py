import pytest

from argmine.prompts import (
    ConfigError,
    SEGMENTATION_QUERY,
    SEGMENTATION_REQUIREMENT,
    TaskKind,
    build_classification_prompt,
    build_segmentation_prompt,
    classification_requirement,
    finetuned_prompt,
    render_finetuned_input,
    render_segmented,
    render_shot_example,
    select_shot_examples,
    split_segments,
)


def test_render_shot_example_segmentation_isaac(isaac):
    text = render_shot_example(isaac, TaskKind.SEGMENTATION)
    assert text.count("<SEP>") == len(isaac.spans) == 4
    # Marker sits right after the span's final character, preceded by a space.
    assert "natural landform. <SEP>" in text
    assert text.endswith("doesn't exist. <SEP>")


def test_render_shot_example_joint_isaac(isaac):
    text = render_shot_example(isaac, TaskKind.TYPE_AND_QUALITY)
    for marker in (
        "<Lead, Adequate>",
        "<Position, Adequate>",
        "<Claim, Adequate>",
        "<Concluding Statement, Ineffective>",
    ):
        assert marker in text
    assert text.count("<") == 4


def test_render_shot_example_type_and_quality_markers(isaac):
    type_text = render_shot_example(isaac, TaskKind.TYPE_ONLY)
    assert "<Lead>" in type_text and "<Concluding Statement>" in type_text
    quality_text = render_shot_example(isaac, TaskKind.QUALITY_ONLY)
    assert quality_text.count("<Adequate>") == 3
    assert quality_text.count("<Ineffective>") == 1


def test_single_span_quality_marker_at_end():
    from argmine.corpus import AnnotatedEssay, GoldSpan, make_essay
    from argmine.labels import ArgType, QualityLabel

    essay = make_essay("S1", "libraries make studying after class much easier")
    one_span = AnnotatedEssay(
        essay=essay,
        spans=(GoldSpan("S1", 0, 0, essay.token_count, ArgType.CLAIM, QualityLabel.EFFECTIVE),),
    )
    text = render_shot_example(one_span, TaskKind.QUALITY_ONLY)
    assert text.count("<") == 1
    assert text.endswith(" <Effective>")


def test_marker_count_equals_span_count_all_fixture(fixture_corpus):
    for split in fixture_corpus:
        for ae in split.essays:
            for task in TaskKind:
                marker_count = render_shot_example(ae, task).count("<")
                assert marker_count == len(ae.spans)


def test_segmentation_prompt_zero_shot(isaac):
    prompt = build_segmentation_prompt(isaac.essay)
    assert prompt.body.count("Segment the following essay into distinct argument components.") == 1
    assert "#EXAMPLE:" not in prompt.body
    assert SEGMENTATION_REQUIREMENT in prompt.body
    assert isaac.essay.normalized_text in prompt.body
    assert prompt.target_argument_index is None


def test_segmentation_prompt_three_shot(train_split, isaac):
    shots = select_shot_examples(train_split.essays, TaskKind.SEGMENTATION, 3)
    prompt = build_segmentation_prompt(isaac.essay, shots)
    assert prompt.body.count("#EXAMPLE:") == 3
    assert prompt.shot_count == 3
    # Examples precede the essay, which precedes the query.
    essay_pos = prompt.body.index("#ESSAY:")
    assert prompt.body.rindex("#EXAMPLE:") < essay_pos < prompt.body.index(SEGMENTATION_QUERY)


def test_five_shots_is_config_error(train_split, isaac):
    with pytest.raises(ConfigError):
        select_shot_examples(train_split.essays, TaskKind.SEGMENTATION, 5)
    shots = select_shot_examples(train_split.essays, TaskKind.SEGMENTATION, 4)
    with pytest.raises(ConfigError):
        build_segmentation_prompt(isaac.essay, shots + shots[:1])


def test_shot_selection_deterministic_id_order(train_split):
    shots = select_shot_examples(train_split.essays, TaskKind.SEGMENTATION, 2)
    first_ids = sorted(e.essay.id for e in train_split.essays)[:2]
    for shot, essay_id in zip(shots, first_ids):
        essay = next(e for e in train_split.essays if e.essay.id == essay_id)
        assert shot.text == render_shot_example(essay, TaskKind.SEGMENTATION)


def test_classification_prompt_type(isaac):
    segmented = render_segmented(isaac.essay, [(s.start_token, s.end_token) for s in isaac.spans])
    prompt = build_classification_prompt(segmented, 1, TaskKind.TYPE_ONLY)
    assert "You are a strict AI evaluator specializing in detecting the type" in prompt.body
    assert "Provide the output as a JSON object with the key: TYPE." in prompt.body
    target = split_segments(segmented)[1]
    assert prompt.body.endswith(f'#ARGUMENT: "{target}"')
    assert prompt.target_argument_index == 1


def test_classification_prompt_joint_key(isaac):
    segmented = render_segmented(isaac.essay, [(s.start_token, s.end_token) for s in isaac.spans])
    prompt = build_classification_prompt(segmented, 0, TaskKind.TYPE_AND_QUALITY)
    assert "key: TYPE AND QUALITY." in prompt.body
    assert "detecting the type" in prompt.body and "assessing the quality" in prompt.body


def test_classification_prompt_index_out_of_range(isaac):
    segmented = render_segmented(isaac.essay, [(s.start_token, s.end_token) for s in isaac.spans])
    with pytest.raises(IndexError):
        build_classification_prompt(segmented, 4, TaskKind.TYPE_ONLY)


def test_classification_requirement_quality():
    text = classification_requirement(TaskKind.QUALITY_ONLY)
    assert text == (
        "For the given argument component, identify its quality. "
        "Provide the output as a JSON object with the key: QUALITY."
    )


def test_finetuned_input_formats(isaac):
    raw = render_finetuned_input(isaac.essay.normalized_text, TaskKind.SEGMENTATION)
    assert raw == isaac.essay.normalized_text
    segmented = render_segmented(isaac.essay, [(s.start_token, s.end_token) for s in isaac.spans])
    joint_input = render_finetuned_input(segmented, TaskKind.TYPE_AND_QUALITY)
    assert joint_input == segmented
    assert "#" not in joint_input  # no boilerplate headers
    prompt = finetuned_prompt(segmented, TaskKind.TYPE_AND_QUALITY)
    assert prompt.mode == "fine_tuned" and prompt.shot_count == 0


def test_finetuned_classification_requires_sep():
    with pytest.raises(ConfigError):
        render_finetuned_input("plain essay text", TaskKind.TYPE_ONLY)
    assert render_finetuned_input("", TaskKind.TYPE_ONLY) == ""


def test_prompt_rendering_stable(isaac, train_split):
    shots = select_shot_examples(train_split.essays, TaskKind.SEGMENTATION, 2)
    a = build_segmentation_prompt(isaac.essay, shots).body
    b = build_segmentation_prompt(isaac.essay, shots).body
    assert a == b


def test_essay_embedded_verbatim(isaac):
    prompt = build_segmentation_prompt(isaac.essay)
    start = prompt.body.index("#ESSAY:\n") + len("#ESSAY:\n")
    end = prompt.body.index("\n\n", start)
    assert prompt.body[start:end] == isaac.essay.normalized_text


def test_shot_task_mismatch_rejected(train_split, isaac):
    shots = select_shot_examples(train_split.essays, TaskKind.TYPE_ONLY, 1)
    with pytest.raises(ConfigError):
        build_segmentation_prompt(isaac.essay, shots)
