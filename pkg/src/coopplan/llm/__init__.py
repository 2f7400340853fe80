"""Prompt templates and completion backends."""

from .backends import (
    DEFAULT_MAX_TOKENS,
    DEFAULT_TEMPERATURE,
    DEFAULT_TOP_P,
    Backend,
    BackendFailure,
    BackendSpec,
    CallRecord,
    CompletionRequest,
    HttpBackend,
    ReplayBackend,
    TranscriptTap,
    backoff_delays,
    complete,
    make_backend,
    transcript_tap,
)
from .prompts import (
    PromptTemplate,
    TemplateError,
    UnboundPlaceholder,
    UnknownBinding,
    load_template,
    render_template,
    template_for,
)
from .scripted import ScriptedBackend
