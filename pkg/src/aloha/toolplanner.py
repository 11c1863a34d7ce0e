"""Registry of external capabilities and the planner that decides which of
them to surface as hyperlinks under an answer.

Tools are links, never executed server-side: the user clicks through to
maps, dashboards, and similar campus services.  The built-in planner is a
gazetteer-and-keyword rule engine so the behavior is testable offline; a
provider-backed planner can replace it, but everything it proposes is
validated against the registry before anything renders.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union
from urllib.parse import quote

from .errors import DuplicateToolName, MalformedTemplate, ProviderUnavailable
from .providers import HttpPlannerProvider

SEMANTIC_TYPES = ("location_name", "free_text", "none")

_PLACEHOLDER = re.compile(r"\{([^{}]*)\}")


@dataclass(frozen=True)
class ToolParam:
    name: str
    semantic_type: str

    def __post_init__(self):
        if self.semantic_type not in SEMANTIC_TYPES:
            raise ValueError(f"unknown semantic type {self.semantic_type!r}")


@dataclass(frozen=True)
class ToolSpec:
    name: str
    function_desc: str
    primary_application: str
    url_template: str
    params: tuple[ToolParam, ...] = ()
    keywords: tuple[str, ...] = ()

    def __post_init__(self):
        param_names = {p.name for p in self.params}
        for placeholder in _PLACEHOLDER.findall(self.url_template):
            if placeholder not in param_names:
                raise MalformedTemplate(
                    f"tool '{self.name}': placeholder {{{placeholder}}} has no matching param"
                )
        if self.url_template.count("{") != self.url_template.count("}"):
            raise MalformedTemplate(f"tool '{self.name}': unbalanced braces in url_template")

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "function_desc": self.function_desc,
            "primary_application": self.primary_application,
            "invocation": {
                "url_template": self.url_template,
                "params": [{"name": p.name, "semantic_type": p.semantic_type} for p in self.params],
            },
        }


@dataclass(frozen=True)
class ToolInvocation:
    tool: ToolSpec
    args: tuple[tuple[str, str], ...]  # sorted (name, value) pairs
    valid: bool

    def args_dict(self) -> dict[str, str]:
        return dict(self.args)


@dataclass(frozen=True)
class ToolLink:
    label: str
    url: str
    tool_name: str

    def to_json(self) -> dict:
        return {"label": self.label, "url": self.url, "tool_name": self.tool_name}


class ToolRegistry:
    """Name-unique, insertion-ordered collection of tool specs."""

    def __init__(self):
        self._tools: dict[str, ToolSpec] = {}

    def register(self, spec: ToolSpec) -> "ToolRegistry":
        if spec.name in self._tools:
            raise DuplicateToolName(f"tool '{spec.name}' is already registered")
        self._tools[spec.name] = spec
        return self

    def get(self, name: str) -> Optional[ToolSpec]:
        return self._tools.get(name)

    def __len__(self) -> int:
        return len(self._tools)

    def __iter__(self):
        return iter(self._tools.values())

    @classmethod
    def from_jsonl(cls, path: Union[str, Path]) -> "ToolRegistry":
        registry = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                invocation = rec.get("invocation", {})
                registry.register(
                    ToolSpec(
                        name=rec["name"],
                        function_desc=rec.get("function_desc", ""),
                        primary_application=rec.get("primary_application", ""),
                        url_template=invocation.get("url_template", rec.get("url_template", "")),
                        params=tuple(
                            ToolParam(name=p["name"], semantic_type=p.get("semantic_type", "free_text"))
                            for p in invocation.get("params", rec.get("params", []))
                        ),
                        keywords=tuple(rec.get("keywords", ())),
                    )
                )
        return registry


def register_tool(registry: ToolRegistry, spec: ToolSpec) -> ToolRegistry:
    return registry.register(spec)


class Gazetteer:
    """Known location names, longest first so nested names match whole."""

    def __init__(self, names: Iterable[str]):
        self.names = tuple(sorted({n.strip() for n in names if n.strip()}, key=lambda n: (-len(n), n)))

    @classmethod
    def from_file(cls, path: Union[str, Path], extra: Iterable[str] = ()) -> "Gazetteer":
        names = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
        return cls([*names, *extra])

    def hits(self, text: str) -> list[str]:
        found = []
        for name in self.names:
            if name and name in text and name not in found:
                found.append(name)
        return found


def plan_tools(
    draft_text: str,
    evidence_titles: Sequence[str],
    registry: ToolRegistry,
    gazetteer: Gazetteer,
    planner: Optional[HttpPlannerProvider] = None,
) -> list[ToolInvocation]:
    """Decide which registered tools to surface for this answer.

    Built-in rules: a gazetteer hit in the draft or an evidence title binds
    every location-typed tool to that name; a keyword hit invokes the
    keyword's tool (parameterless tools link as-is).  Provider proposals
    are validated against the registry; unknown tools or unbound params are
    kept with valid=False for the trace and never render.  At most one link
    per (tool, args).
    """
    if len(registry) == 0:
        return []
    if planner is not None:
        try:
            proposals = planner.plan(draft_text, [spec.to_json() for spec in registry])
            return _validate_proposals(proposals, registry)
        except ProviderUnavailable:
            pass

    scan_text = "\n".join([draft_text, *evidence_titles])
    invocations: list[ToolInvocation] = []
    seen: set[tuple[str, tuple[tuple[str, str], ...]]] = set()

    def add(tool: ToolSpec, args: dict[str, str]) -> None:
        frozen = tuple(sorted(args.items()))
        if (tool.name, frozen) in seen:
            return
        seen.add((tool.name, frozen))
        invocations.append(ToolInvocation(tool=tool, args=frozen, valid=True))

    location_hits = gazetteer.hits(scan_text)
    for tool in registry:
        location_params = [p for p in tool.params if p.semantic_type == "location_name"]
        if location_params:
            for name in location_hits:
                add(tool, {p.name: name for p in location_params})
            continue
        if tool.keywords and any(keyword in scan_text for keyword in tool.keywords):
            bindable = [p for p in tool.params if p.semantic_type != "none"]
            if not bindable:
                add(tool, {})
    return invocations


def _validate_proposals(proposals: Sequence[dict], registry: ToolRegistry) -> list[ToolInvocation]:
    out: list[ToolInvocation] = []
    seen: set[tuple[str, tuple[tuple[str, str], ...]]] = set()
    for proposal in proposals:
        name = str(proposal.get("tool", ""))
        args = {str(k): str(v) for k, v in (proposal.get("args") or {}).items()}
        frozen = tuple(sorted(args.items()))
        if (name, frozen) in seen:
            continue
        seen.add((name, frozen))
        tool = registry.get(name)
        if tool is None:
            placeholder = ToolSpec(
                name=name or "<unknown>",
                function_desc="",
                primary_application="",
                url_template="",
            )
            out.append(ToolInvocation(tool=placeholder, args=frozen, valid=False))
            continue
        bound = all(args.get(p.name, "") != "" for p in tool.params if p.semantic_type != "none")
        out.append(ToolInvocation(tool=tool, args=frozen, valid=bound))
    return out


def render_links(invocations: Sequence[ToolInvocation]) -> list[ToolLink]:
    """Substitute and percent-encode args (RFC 3986); invalid bindings never render."""
    links = []
    for invocation in invocations:
        if not invocation.valid:
            continue
        args = invocation.args_dict()
        url = invocation.tool.url_template
        for name, value in args.items():
            url = url.replace("{" + name + "}", quote(value, safe=""))
        if "{" in url or "}" in url:
            continue
        primary = next((args[p.name] for p in invocation.tool.params if p.name in args), None)
        label = f"{invocation.tool.name}: {primary}" if primary else invocation.tool.name
        links.append(ToolLink(label=label, url=url, tool_name=invocation.tool.name))
    return links
