"""End-to-end orchestration: prompt in, assessed building artifacts out.

A single generation run chains refine -> generate -> repair -> synthesize
-> assess -> export and writes every intermediate artifact to the output
directory, so each evaluation figure can be audited back to concrete
files.  The evaluation harness repeats runs and aggregates the two
correctness flags into a contingency report.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .assess import (
    AssessmentConfig,
    AssessmentReport,
    EmptyGrid,
    MaterialRequirementList,
    assess,
    check_satisfaction,
    load_aliases,
)
from .export import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_ENDPOINT,
    EndpointUnreachable,
    PlacementBatchResult,
    export_command_script,
    export_voxel_dump,
    place_via_http,
)
from .interlayer import ORIGIN, BlockPoint, InterlayerDocument, serialize_document
from .llm import (
    DEFAULT_MAX_ATTEMPTS,
    GenerationFailed,
    GenerationTrace,
    HttpChatTransport,
    PromptBundle,
    RecordedTransport,
    Transport,
    TransportError,
    generate_interlayer,
    mark_fallback,
    refine_prompt,
)
from .repair import (
    BlockRegistry,
    RepairLog,
    bundled_registry,
    load_registry,
    repair_document,
)
from .voxel import PlacementReport, VoxelGrid, synthesize

TRIAL_DIR_PATTERN = re.compile(r"^trial-(\d+)$")
_WORD = re.compile(r"[a-z][a-z_]*")


class ConfigError(ValueError):
    """Bad pipeline configuration: missing files, bad values."""


@dataclass
class PipelineConfig:
    model: str = "gpt-4"
    base_url: str = "https://api.openai.com/v1"
    temperature: float = 1.0
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    refine: bool = True
    fixtures_dir: Path | None = None
    registry_path: Path | None = None
    alias_path: Path | None = None
    prompt_dir: Path | None = None
    keyword_path: Path | None = None
    requirements: tuple[str, ...] = ()
    targets: tuple[str, ...] = ("dump", "script")
    endpoint: str = DEFAULT_ENDPOINT
    offset: BlockPoint = ORIGIN
    batch_size: int = DEFAULT_BATCH_SIZE
    gdpc_axes: bool = False
    start_point: BlockPoint | None = None

    def validate_paths(self) -> None:
        """Fail fast on missing inputs, before any network traffic."""
        for label, path in (
            ("fixtures", self.fixtures_dir),
            ("registry", self.registry_path),
            ("aliases", self.alias_path),
            ("prompts", self.prompt_dir),
            ("keywords", self.keyword_path),
        ):
            if path is not None and not Path(path).exists():
                raise ConfigError(f"{label} path does not exist: {path}")
        for target in self.targets:
            if target not in ("dump", "script", "http"):
                raise ConfigError(f"unknown export target {target!r}")
        if self.max_attempts < 1:
            raise ConfigError("max_attempts must be at least 1")


def parse_keywords(text: str) -> dict[str, str]:
    """Parse ``keyword = group`` lines; ``#`` starts a comment."""
    mapping: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip() or not value.strip():
            raise ValueError(f"bad keyword line: {raw!r}")
        mapping[key.strip()] = value.strip()
    return mapping


def load_keywords(path: str | Path | None = None) -> dict[str, str]:
    if path is None:
        text = resources.files("t2bm.data").joinpath("keywords.txt").read_text(
            encoding="utf-8"
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    return parse_keywords(text)


def derive_requirements(prompt: str, keywords: dict[str, str]) -> tuple[str, ...]:
    """Map prompt words onto requirement groups, keeping first-use order."""
    seen: list[str] = []
    for word in _WORD.findall(prompt.lower()):
        group = keywords.get(word)
        if group is not None and group not in seen:
            seen.append(group)
    return tuple(seen)


def trace_id_for(raw_input: str, interlayer_text: str) -> str:
    digest = hashlib.sha256(
        f"{raw_input}\n{interlayer_text}".encode("utf-8")
    ).hexdigest()
    return digest[:12]


def _dump_json(path: Path, payload) -> None:
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


@dataclass
class GenerateResult:
    trace_id: str
    document: InterlayerDocument
    repair_log: RepairLog
    grid: VoxelGrid
    placement: PlacementReport
    assessment: AssessmentReport
    requirements: tuple[str, ...]
    trace: GenerationTrace
    out_dir: Path | None = None
    http_result: PlacementBatchResult | None = None

    @property
    def completeness(self) -> bool:
        return self.assessment.completeness

    @property
    def satisfaction(self) -> bool:
        return self.assessment.satisfaction


def build_transport(config: PipelineConfig) -> Transport:
    if config.fixtures_dir is not None:
        return RecordedTransport(config.fixtures_dir)
    return HttpChatTransport(config.base_url)


def _load_registry(config: PipelineConfig) -> BlockRegistry:
    if config.registry_path is not None:
        return load_registry(config.registry_path)
    return bundled_registry()


def _requirements_for(config: PipelineConfig, prompt: str) -> MaterialRequirementList:
    aliases = load_aliases(config.alias_path)
    required = config.requirements
    if not required:
        required = derive_requirements(prompt, load_keywords(config.keyword_path))
    return MaterialRequirementList(required=required, aliases=aliases)


def _assess_grid(
    grid: VoxelGrid, reqs: MaterialRequirementList, config: PipelineConfig
) -> AssessmentReport:
    try:
        return assess(grid, reqs, AssessmentConfig(start_point=config.start_point))
    except EmptyGrid:
        # An empty building has no structure; satisfaction falls back to
        # matching requirements against no materials at all.
        return AssessmentReport(
            satisfaction=check_satisfaction(frozenset(), reqs),
            completeness=False,
            materials_found=frozenset(),
            main_structure=frozenset(),
            visited_count=0,
            prune_iterations=0,
        )


def run_generate(
    prompt: str,
    config: PipelineConfig,
    out_dir: str | Path | None = None,
    transport: Transport | None = None,
) -> GenerateResult:
    """Run the full workflow for one prompt.

    With refinement off the refinement request is never issued and the raw
    prompt goes straight to building generation.  Raises GenerationFailed
    when no parseable building comes back; export problems also raise, but
    only after generation artifacts have been written.
    """
    config.validate_paths()
    bundle = PromptBundle.load(config.prompt_dir)
    registry = _load_registry(config)
    reqs = _requirements_for(config, prompt)
    transport = transport or build_transport(config)

    refined = prompt
    fallback = False
    if config.refine:
        result = refine_prompt(
            prompt,
            bundle,
            transport,
            model=config.model,
            temperature=config.temperature,
        )
        refined = result.text
        fallback = result.fallback

    document, trace = generate_interlayer(
        refined,
        bundle,
        transport,
        max_attempts=config.max_attempts,
        model=config.model,
        temperature=config.temperature,
        raw_input=prompt,
    )
    if fallback:
        trace = mark_fallback(trace)

    repaired, log = repair_document(document, registry)
    grid, placement = synthesize(repaired, offset=ORIGIN)
    assessment = _assess_grid(grid, reqs, config)
    tid = trace_id_for(prompt, trace.interlayer_text)

    result = GenerateResult(
        trace_id=tid,
        document=repaired,
        repair_log=log,
        grid=grid,
        placement=placement,
        assessment=assessment,
        requirements=reqs.required,
        trace=trace,
    )

    if out_dir is not None:
        result.out_dir = Path(out_dir)
        write_artifacts(result, result.out_dir, config)

    if "http" in config.targets:
        result.http_result = place_via_http(
            grid,
            endpoint=config.endpoint,
            offset=config.offset,
            batch_size=config.batch_size,
            gdpc_axes=config.gdpc_axes,
        )
        if result.out_dir is not None:
            _dump_json(
                result.out_dir / "report.json", _report_payload(result)
            )
    return result


def _report_payload(result: GenerateResult) -> dict:
    report = result.assessment
    payload = {
        "trace_id": result.trace_id,
        "completeness": report.completeness,
        "satisfaction": report.satisfaction,
        "requirements": list(result.requirements),
        "materials_found": sorted(report.materials_found),
        "main_structure_size": len(report.main_structure),
        "visited_count": report.visited_count,
        "prune_iterations": report.prune_iterations,
        "placement": {
            "blocks_placed": result.placement.blocks_placed,
            "blocks_carved": result.placement.blocks_carved,
            "sections_placed": result.placement.sections_placed,
            "out_of_bounds_sections": list(result.placement.out_of_bounds_sections),
        },
    }
    if result.http_result is not None:
        payload["http_placement"] = {
            "sent": result.http_result.sent,
            "acknowledged": result.http_result.acknowledged,
            "failed": [
                {"x": p.x, "y": p.y, "z": p.z, "reason": reason}
                for p, reason in result.http_result.failed
            ],
        }
    return payload


def write_artifacts(
    result: GenerateResult, out_dir: Path, config: PipelineConfig
) -> None:
    """Persist trace, repaired document, repair log, exports, and report."""
    out_dir.mkdir(parents=True, exist_ok=True)
    trace = result.trace
    _dump_json(
        out_dir / "trace.json",
        {
            "trace_id": result.trace_id,
            "raw_input": trace.raw_input,
            "refined_prompt": trace.refined_prompt,
            "interlayer_text": trace.interlayer_text,
            "attempts": trace.attempts,
            "transport": trace.transport,
            "refine_fallback": trace.refine_fallback,
        },
    )
    (out_dir / "interlayer.json").write_text(
        serialize_document(result.document), encoding="utf-8"
    )
    _dump_json(
        out_dir / "repairs.json",
        [
            {
                "rule": e.rule.value,
                "section": e.section,
                "path": e.path,
                "before": e.before,
                "after": e.after,
            }
            for e in result.repair_log.entries
        ],
    )
    if "dump" in config.targets:
        export_voxel_dump(result.grid, out_dir / "building.voxels.json")
    if "script" in config.targets:
        export_command_script(
            result.grid, offset=config.offset, path=out_dir / "building.mcfunction"
        )
    _dump_json(out_dir / "report.json", _report_payload(result))


@dataclass(frozen=True)
class TrialRow:
    index: int
    trace_id: str
    parsed: bool
    completeness: bool
    satisfaction: bool


@dataclass
class EvalReport:
    """Contingency of completeness (C) and satisfaction (S) over trials.

    Ratios are taken over parsed trials; the four conjunction ratios sum
    to one and the marginals derive from them exactly.
    """

    trials: int
    rows: list[TrialRow] = field(default_factory=list)

    @property
    def parsed_count(self) -> int:
        return sum(1 for r in self.rows if r.parsed)

    def _count(self, c: bool, s: bool) -> int:
        return sum(
            1
            for r in self.rows
            if r.parsed and r.completeness == c and r.satisfaction == s
        )

    @property
    def counts(self) -> dict[str, int]:
        return {
            "C": self._count(True, False) + self._count(True, True),
            "S": self._count(False, True) + self._count(True, True),
            "nC_nS": self._count(False, False),
            "C_nS": self._count(True, False),
            "nC_S": self._count(False, True),
            "C_S": self._count(True, True),
        }

    @property
    def ratios(self) -> dict[str, float]:
        parsed = self.parsed_count
        if parsed == 0:
            return {key: 0.0 for key in self.counts}
        return {key: count / parsed for key, count in self.counts.items()}

    def to_table(self) -> str:
        header = ["C", "S", "¬C∧¬S", "C∧¬S", "¬C∧S", "C∧S"]
        ratios = self.ratios
        values = [
            ratios["C"],
            ratios["S"],
            ratios["nC_nS"],
            ratios["C_nS"],
            ratios["nC_S"],
            ratios["C_S"],
        ]
        widths = [max(len(h), 5) for h in header]
        lines = [
            f"trials: {self.trials}    parsed: {self.parsed_count}",
            "  ".join(h.ljust(w) for h, w in zip(header, widths)),
            "  ".join(f"{v:.2f}".ljust(w) for v, w in zip(values, widths)),
        ]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "parsed_count": self.parsed_count,
            "counts": self.counts,
            "ratios": self.ratios,
            "rows": [
                {
                    "index": r.index,
                    "trace_id": r.trace_id,
                    "parsed": r.parsed,
                    "completeness": r.completeness,
                    "satisfaction": r.satisfaction,
                }
                for r in self.rows
            ],
        }


def _trial_fixture_dirs(root: Path) -> list[Path]:
    dirs = [
        child
        for child in sorted(root.iterdir())
        if child.is_dir() and TRIAL_DIR_PATTERN.match(child.name)
    ]
    return dirs


def run_eval(
    prompt: str,
    trials: int,
    config: PipelineConfig,
    out_dir: str | Path | None = None,
) -> EvalReport:
    """Run the generation workflow ``trials`` times and aggregate flags.

    Under a recorded transport, trial N draws its responses from the
    ``trial-NNN`` subdirectory of the fixture store when such directories
    exist, so distinct canned buildings can be replayed per trial.  A trial
    that fails to produce a parseable building is counted as unparsed and
    never aborts the batch.
    """
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    config.validate_paths()

    trial_dirs: list[Path] = []
    if config.fixtures_dir is not None:
        trial_dirs = _trial_fixture_dirs(Path(config.fixtures_dir))
        if trial_dirs and len(trial_dirs) < trials:
            raise ConfigError(
                f"fixture store has {len(trial_dirs)} trial directories, "
                f"need {trials}"
            )

    out_path = Path(out_dir) if out_dir is not None else None
    report = EvalReport(trials=trials)
    for index in range(trials):
        trial_config = config
        if trial_dirs:
            trial_config = replace(config, fixtures_dir=trial_dirs[index])
        trial_out = out_path / f"trial-{index:03d}" if out_path else None
        try:
            result = run_generate(prompt, trial_config, out_dir=trial_out)
        except (GenerationFailed, TransportError, EndpointUnreachable):
            report.rows.append(
                TrialRow(
                    index=index,
                    trace_id="-",
                    parsed=False,
                    completeness=False,
                    satisfaction=False,
                )
            )
            continue
        report.rows.append(
            TrialRow(
                index=index,
                trace_id=result.trace_id,
                parsed=True,
                completeness=result.completeness,
                satisfaction=result.satisfaction,
            )
        )
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        _dump_json(out_path / "report.json", report.to_dict())
        (out_path / "report.txt").write_text(report.to_table(), encoding="utf-8")
    return report
