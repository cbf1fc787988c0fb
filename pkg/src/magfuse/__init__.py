"""magfuse: grammar-level fusion of timed speech and gesture token streams.

Recognizer outputs become terminal symbols of one multimodal attribute
grammar; a CYK chart parser with synthesized-attribute evaluation turns a
fused sentence into an attributed tree and a driver-assistance command frame.
Sentences the grammar cannot derive feed an incremental rule learner gated by
user confirmation.
"""

from .commands import (
    CommandFrame,
    MeaningRegistry,
    UninterpretableError,
    enumerate_language,
    frame_from_wire,
    frame_to_wire,
    interpret,
    normalize_pattern,
    normalize_values,
    seed_meanings,
)
from .grammar import (
    AttrDomain,
    AttrKind,
    AttributeDecl,
    BinarizedGrammar,
    BinRule,
    Concat,
    CoopType,
    Lit,
    ModLit,
    Modality,
    MultimodalGrammar,
    Production,
    Ref,
    SemanticFunction,
    SynRole,
    TerminalDef,
    ValidationReport,
    binarize,
    lexical_production,
    make_terminal,
    seed_grammar,
    validate_grammar,
)
from .learner import (
    AlreadyParseableError,
    ConstituentCover,
    MeaningRequiredError,
    MissingRolesError,
    RuleDelta,
    StaleDeltaError,
    apply_delta,
    find_cover,
    propose_delta,
    render_delta,
)
from .magfile import GrammarFileError, load_grammar, save_grammar
from .parser import (
    AttributeEvaluationError,
    ChartTable,
    CoverSegment,
    EmptyInputError,
    NoParseError,
    NotParseable,
    ParseTree,
    evaluate_attributes,
    extract_trees,
    match_terminal,
    parse,
    recognize,
    tree_to_wire,
)
from .service import Engine, SessionState, TeachSession, create_app, run_pipeline
from .tokens import (
    FusionConfig,
    MultimodalSentence,
    MultimodalToken,
    TokenStreamError,
    UnresolvableDeicticError,
    bind_deictic,
    detect_cooperation,
    ingest_stream,
    merge_streams,
    token_from_wire,
    token_to_wire,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
