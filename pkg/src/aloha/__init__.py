"""Campus information consultation assistant.

Pipeline: language detection and pivot translation, intent classification
with nearest-neighbor candidate filtering, a hierarchical retrieval cascade
over a typed document store, grounded answer generation with references,
and tool-link planning.  Exposed as a library, an HTTP service, and a CLI.
"""

from .config import Config, load_config
from .docstore import CorpusSnapshot, DocKind, Document, RawTable, ingest, refresh, subset, table_to_markdown
from .errors import AlohaError, ProviderUnavailable
from .generation import DraftResponse, FinalResponse, assemble_prompt, fallback_response, finalize, generate
from .intent import (
    IntentClass,
    IntentIndex,
    IntentPrediction,
    build_intent_index,
    classify_intent,
    evaluate_intent,
    hic_candidates,
    knn_vote,
)
from .langid import DetectionResult, LanguageFrontdoor, NormalizedQuery
from .providers import HashedNgramEmbedder, ProviderSuite, TranslatorChain
from .queryparse import CommandForm, LexiconAnnotator, match_concept, reduce_to_command
from .retrieval import (
    CascadeTrace,
    EvidenceSet,
    InvertedIndex,
    apply_threshold,
    cosine_similarity,
    lexical_retrieve,
    rerank,
    run_cascade,
)
from .service import ServiceState, build_state, create_app, handle_chat
from .toolplanner import Gazetteer, ToolLink, ToolRegistry, ToolSpec, plan_tools, render_links

__version__ = "0.1.0"
