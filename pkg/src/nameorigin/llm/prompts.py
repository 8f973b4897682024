"""Prompt templates, shipped as versioned in-code assets.

Structural requirements are normative: the candidate label list appears in
the system message, answers are requested as a JSON array ordered by
confidence, and multi-stage strategies restate the contract each stage.
Wording may evolve; bump PROMPT_VERSION when it does.
"""

PROMPT_VERSION = "1"

SYSTEM_BASE = (
    "You identify the most likely nationality behind a romanized personal name.\n"
    "Choose only from the following {count} {label_kind}:\n"
    "{labels}\n"
    "Answer with a JSON array of exactly {top_k} {label_kind} from the list, "
    "ordered from most likely to least likely. Output only the JSON array."
)

USER_QUERY = 'Name: "{name}"'

FEWSHOT_BLOCK = (
    "\nHere are solved examples (name → nationality):\n{examples}\n"
)

COT_SUFFIX = (
    "\nBefore answering, analyse the name step by step: phonological patterns, "
    "prefixes and suffixes, likely etymology, and the script conventions of the "
    "romanization. Then give your final answer as a JSON array of exactly "
    "{top_k} {label_kind} on the last line."
)

REFLECTION_FOLLOWUP = (
    "Review your answer. Is the prediction correct? Could other nationalities "
    "be more plausible for this name? Reconsider, then output your final answer "
    "as a JSON array of exactly {top_k} nationalities from the original list, "
    "ordered from most likely to least likely. Output only the JSON array."
)

STAGE_CONTINENT = (
    "You identify the most likely continent of origin of a romanized personal name.\n"
    "Choose only from the following continents:\n{labels}\n"
    "Answer with a JSON array of the continents ordered from most likely to "
    "least likely. Output only the JSON array."
)

STAGE_REGION = (
    "The name is believed to come from {continent}. Choose the most likely "
    "region from this list:\n{labels}\n"
    "Answer with a JSON array of the regions ordered from most likely to least "
    "likely. Output only the JSON array."
)

STAGE_NATIONALITY = (
    "The name is believed to come from the region {region}. Choose the most "
    "likely nationalities from this list:\n{labels}\n"
    "Answer with a JSON array of up to {top_k} nationalities from the list, "
    "ordered from most likely to least likely. Output only the JSON array."
)


def label_block(labels) -> str:
    return ", ".join(labels)


def system_prompt(labels, top_k: int, label_kind: str = "nationalities") -> str:
    return SYSTEM_BASE.format(
        count=len(labels), labels=label_block(labels), top_k=top_k, label_kind=label_kind
    )
