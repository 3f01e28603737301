"""Text-to-building pipeline for Minecraft.

Parse LLM-generated building JSON, repair it against a block registry,
render it into a voxel grid, assess structural completeness and material
satisfaction, and export the result to command scripts, voxel dumps, or a
live block-placement server.
"""

from .assess import (
    AssessmentConfig,
    AssessmentReport,
    MaterialRequirementList,
    assess,
    check_satisfaction,
    classify_block,
    flood_fill,
    load_aliases,
    prune_to_main_structure,
)
from .export import (
    PlacementBatchResult,
    export_command_script,
    export_voxel_dump,
    load_voxel_dump,
    place_via_http,
)
from .interlayer import (
    BlockExtent,
    BlockPoint,
    InterlayerDocument,
    ParseFailure,
    Section,
    SectionKind,
    extract_json,
    functional,
    parse_document,
    serialize_document,
    structural,
)
from .llm import (
    ChatMessage,
    ChatRequest,
    ChatResponse,
    GenerationTrace,
    HttpChatTransport,
    PromptBundle,
    RecordedTransport,
    generate_interlayer,
    refine_prompt,
    request_fingerprint,
)
from .pipeline import EvalReport, PipelineConfig, run_eval, run_generate
from .repair import (
    BlockRegistry,
    RepairLog,
    RepairRule,
    bundled_registry,
    load_registry,
    repair_document,
    validate_document,
)
from .voxel import Block, PlacementReport, VoxelGrid, place_section, synthesize

__version__ = "0.1.0"

__all__ = [
    "AssessmentConfig",
    "AssessmentReport",
    "Block",
    "BlockExtent",
    "BlockPoint",
    "BlockRegistry",
    "ChatMessage",
    "ChatRequest",
    "ChatResponse",
    "EvalReport",
    "GenerationTrace",
    "HttpChatTransport",
    "InterlayerDocument",
    "MaterialRequirementList",
    "ParseFailure",
    "PipelineConfig",
    "PlacementBatchResult",
    "PlacementReport",
    "PromptBundle",
    "RecordedTransport",
    "RepairLog",
    "RepairRule",
    "Section",
    "SectionKind",
    "VoxelGrid",
    "assess",
    "bundled_registry",
    "check_satisfaction",
    "classify_block",
    "export_command_script",
    "export_voxel_dump",
    "extract_json",
    "flood_fill",
    "functional",
    "generate_interlayer",
    "load_aliases",
    "load_registry",
    "load_voxel_dump",
    "parse_document",
    "place_section",
    "place_via_http",
    "prune_to_main_structure",
    "refine_prompt",
    "repair_document",
    "request_fingerprint",
    "run_eval",
    "run_generate",
    "serialize_document",
    "structural",
    "synthesize",
    "validate_document",
]
