from .client import (
    API_KEY_ENV,
    GLOBAL_KEYS,
    ICS_KEYS,
    LOCAL_KEYS,
    TEMPLATE_IDS,
    JudgeClient,
    JudgeError,
    JudgeParseError,
    JudgeResult,
    JudgeTransportError,
    RetryPolicy,
    chat_complete,
    extract_judge_json,
    load_template,
    render_prompt,
)
from .scoring import (
    MSFI_LOCAL_COUNT,
    WeightConfig,
    ics_from_result,
    ics_score,
    msfi_dimension_score,
    msfi_index,
)

__all__ = [
    "API_KEY_ENV", "GLOBAL_KEYS", "ICS_KEYS", "LOCAL_KEYS", "TEMPLATE_IDS",
    "JudgeClient", "JudgeError", "JudgeParseError", "JudgeResult",
    "JudgeTransportError", "RetryPolicy", "chat_complete",
    "extract_judge_json", "load_template", "render_prompt",
    "MSFI_LOCAL_COUNT", "WeightConfig", "ics_from_result", "ics_score",
    "msfi_dimension_score", "msfi_index",
]
