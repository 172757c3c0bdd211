"""API registry: the seven travel-domain tool schemas.

The registry ships as a machine-readable JSON file (``data/api_registry.json``)
naming each API, its argument names, descriptions and enums, plus which
database field is the unique id per domain. All arguments are optional in
every API; the attraction domain has no book intent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterator, Mapping


@dataclass(frozen=True)
class ApiParameter:
    description: str = ""
    enum: tuple[str, ...] | None = None


@dataclass(frozen=True)
class ApiSpec:
    name: str
    domain: str
    intent: str  # "search" | "book"
    description: str = ""
    parameters: Mapping[str, ApiParameter] = field(default_factory=dict)
    unique_id_parameter: str | None = None  # book APIs only

    def parameter_names(self) -> set[str]:
        return set(self.parameters)


class ApiRegistry:
    """Lookup of ApiSpec by name plus per-domain database metadata."""

    def __init__(self, specs: list[ApiSpec], db_unique_ids: Mapping[str, str]):
        self._by_name = {s.name: s for s in specs}
        self._db_unique_ids = dict(db_unique_ids)

    def __contains__(self, api_name: str) -> bool:
        return api_name in self._by_name

    def __iter__(self) -> Iterator[ApiSpec]:
        return iter(self._by_name.values())

    def get(self, api_name: str) -> ApiSpec | None:
        return self._by_name.get(api_name)

    def spec(self, api_name: str) -> ApiSpec:
        try:
            return self._by_name[api_name]
        except KeyError:
            raise KeyError(f"unknown API: {api_name!r}") from None

    def api_names(self) -> list[str]:
        return list(self._by_name)

    def domains(self) -> list[str]:
        return list(self._db_unique_ids)

    def db_unique_id_field(self, domain: str) -> str:
        try:
            return self._db_unique_ids[domain]
        except KeyError:
            raise KeyError(f"unknown domain: {domain!r}") from None

    def api_for(self, domain: str, intent: str) -> ApiSpec | None:
        for spec in self._by_name.values():
            if spec.domain == domain and spec.intent == intent:
                return spec
        return None

    def to_tool_schemas(self) -> list[dict[str, Any]]:
        """Render the registry in chat-completions ``tools`` wire format."""
        tools = []
        for spec in self._by_name.values():
            props: dict[str, Any] = {}
            for pname, p in spec.parameters.items():
                entry: dict[str, Any] = {"type": "string", "description": p.description}
                if p.enum is not None:
                    entry["enum"] = list(p.enum)
                props[pname] = entry
            tools.append(
                {
                    "type": "function",
                    "function": {
                        "name": spec.name,
                        "description": spec.description,
                        "parameters": {"type": "object", "required": [], "properties": props},
                    },
                }
            )
        return tools


def _parse_registry(data: Mapping[str, Any]) -> ApiRegistry:
    specs = []
    for api in data["apis"]:
        params = {
            pname: ApiParameter(
                description=p.get("description", ""),
                enum=tuple(p["enum"]) if "enum" in p else None,
            )
            for pname, p in api.get("parameters", {}).items()
        }
        specs.append(
            ApiSpec(
                name=api["name"],
                domain=api["domain"],
                intent=api["intent"],
                description=api.get("description", ""),
                parameters=params,
                unique_id_parameter=api.get("unique_id_parameter"),
            )
        )
    db_ids = {d: meta["unique_id_field"] for d, meta in data.get("databases", {}).items()}
    return ApiRegistry(specs, db_ids)


def load_registry(path: str | Path) -> ApiRegistry:
    with open(path, encoding="utf-8") as f:
        return _parse_registry(json.load(f))


def default_registry() -> ApiRegistry:
    """The registry shipped with the package."""
    text = resources.files("turnbeam").joinpath("data/api_registry.json").read_text("utf-8")
    return _parse_registry(json.loads(text))
