from hypothesis import given, strategies as st

from nameorigin.llm.parsing import last_string_array, parse_response

SPACE = ["Japanese", "Chinese", "Korean", "Taiwanese", "Vietnamese", "Russian", "Romanian",
         "Moldovan"]


def test_plain_array():
    result = parse_response('["Japanese", "Chinese"]', SPACE)
    assert result.labels == ("Japanese", "Chinese")
    assert not result.parse_error


def test_case_canonicalisation_and_dedupe():
    result = parse_response('["Japanese", "japanese", "JAPANESE"]', SPACE)
    assert result.labels == ("Japanese",)
    assert not result.parse_error


def test_prose_with_embedded_array():
    text = "The name looks Slavic to me. [\"Romanian\", \"Moldovan\"] would be my guess."
    result = parse_response(text, SPACE)
    assert result.labels == ("Romanian", "Moldovan")


def test_last_array_wins():
    text = 'First guess ["Chinese"] ... on reflection ["Korean", "Japanese"]'
    result = parse_response(text, SPACE)
    assert result.labels == ("Korean", "Japanese")


def test_object_is_parse_error():
    result = parse_response("{}", SPACE)
    assert result.labels == ()
    assert result.parse_error


def test_no_array_is_parse_error():
    result = parse_response("I think the name is Japanese.", SPACE)
    assert result.labels == ()
    assert result.parse_error


def test_unknown_labels_filtered_without_parse_error():
    result = parse_response('["Atlantean", "Narnian"]', SPACE)
    assert result.labels == ()
    assert not result.parse_error


def test_truncates_to_limit():
    text = '["Japanese","Chinese","Korean","Taiwanese","Vietnamese","Russian","Romanian"]'
    result = parse_response(text, SPACE)
    assert len(result.labels) == 5


def test_non_string_arrays_skipped():
    text = "[1, 2, 3] then the real answer [\"Korean\"] and trailing [4]"
    result = parse_response(text, SPACE)
    assert result.labels == ("Korean",)


def test_nested_array_inner_match():
    assert last_string_array('["a", ["b"]]') == ["b"]


def test_whitespace_trimmed_entries():
    result = parse_response('["  Japanese  ", " korean"]', SPACE)
    assert result.labels == ("Japanese", "Korean")


@given(st.text(max_size=200))
def test_parser_never_crashes_and_respects_invariants(text):
    result = parse_response(text, SPACE)
    assert len(result.labels) <= 5
    assert len(set(result.labels)) == len(result.labels)
    assert all(lab in SPACE for lab in result.labels)
