"""greyharvest - bibliographic metadata for any URI."""

__version__ = "0.1.0"

from .config import Config, get_config, reload_config
from .embedder import EmbedFormat, Markup, RecordOverride, emit_markup
from .lookup import Harvester
from .model import (
    BibRecord,
    CompletenessClass,
    Field,
    MetadataFragment,
    PartialDate,
    Person,
    SourceKind,
    classify,
    normalize_uri,
)
from .resolver import Resolver, ScoreTable, merge_fragments
from .serializers import FORMATS, render
from .store import Store

__all__ = [
    # Version
    "__version__",
    # Model
    "BibRecord",
    "CompletenessClass",
    "Field",
    "MetadataFragment",
    "PartialDate",
    "Person",
    "SourceKind",
    "classify",
    "normalize_uri",
    # Resolution
    "Harvester",
    "Resolver",
    "ScoreTable",
    "merge_fragments",
    "Store",
    # Output
    "FORMATS",
    "render",
    "EmbedFormat",
    "Markup",
    "RecordOverride",
    "emit_markup",
    # Config
    "Config",
    "get_config",
    "reload_config",
]
