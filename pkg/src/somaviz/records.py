"""Clinical record model: views, categories, typed findings and examinations.

A record stores only abnormal findings; a structure without an observation is
considered normal.  Property domains are closed lists, so every recorded value
is validated against the category definition of the active view registry.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from importlib import resources

Value = int | str | bool

DATA_TYPES = ("nominal", "ordinal", "numerical")


class RecordError(ValueError):
    """Raised for any invalid record document or record operation.

    ``code`` is a stable machine-readable token, e.g. ``value-outside-domain``.
    """

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class Property:
    """One typed attribute of a finding, with a closed value domain."""

    prop_type: str
    data_type: str  # nominal | ordinal | numerical
    domain: tuple[Value, ...]
    normal_value: Value | None = None  # value meaning "no finding", if inside domain

    def __post_init__(self):
        if self.data_type not in DATA_TYPES:
            raise RecordError("malformed-document", f"bad dataType {self.data_type!r}")
        if not self.domain:
            raise RecordError("malformed-document", f"empty domain for {self.prop_type}")
        if len(set(self.domain)) != len(self.domain):
            raise RecordError("malformed-document", f"duplicate domain values for {self.prop_type}")
        if self.normal_value is not None and self.normal_value not in self.domain:
            raise RecordError("malformed-document", f"normalValue outside domain for {self.prop_type}")

    @property
    def ordered(self) -> bool:
        return self.data_type in ("ordinal", "numerical")

    def index_of(self, value: Value) -> int:
        try:
            return self.domain.index(value)
        except ValueError:
            raise RecordError("value-outside-domain", f"{value!r} not in domain of {self.prop_type}") from None

    def effective_domain(self) -> tuple[Value, ...]:
        """Domain values that actually encode a finding (normal value excluded)."""
        return tuple(v for v in self.domain if v != self.normal_value)


@dataclass(frozen=True)
class Category:
    """A finding type bound to one kind of anatomical structure."""

    name: str
    spatial_ref: str  # structure kind token: muscle, dermatome, tendon, organ, ...
    props: tuple[Property, ...]

    def __post_init__(self):
        types = [p.prop_type for p in self.props]
        if len(set(types)) != len(types):
            raise RecordError("malformed-document", f"duplicate property types in {self.name}")

    def prop(self, prop_type: str) -> Property:
        for p in self.props:
            if p.prop_type == prop_type:
                return p
        raise RecordError("malformed-document", f"category {self.name} has no property {prop_type}")

    @property
    def prop_types(self) -> tuple[str, ...]:
        return tuple(p.prop_type for p in self.props)


@dataclass(frozen=True)
class View:
    """The categories relevant to one clinical usage context."""

    name: str
    categories: tuple[Category, ...]

    def __post_init__(self):
        names = [c.name for c in self.categories]
        if len(set(names)) != len(names):
            raise RecordError("malformed-document", f"duplicate categories in view {self.name}")

    def category(self, name: str) -> Category:
        for c in self.categories:
            if c.name == name:
                return c
        raise RecordError("unknown-category", f"category {name!r} not in view {self.name}")

    @property
    def category_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.categories)


@dataclass
class ViewRegistry:
    """All known categories plus the views that group them."""

    categories: dict[str, Category]
    views: dict[str, View]
    default_view: str

    def view(self, name: str | None = None) -> View:
        name = name or self.default_view
        if name not in self.views:
            raise RecordError("unknown-category", f"unknown view {name!r}")
        return self.views[name]

    def category(self, name: str) -> Category:
        if name not in self.categories:
            raise RecordError("unknown-category", f"unknown category {name!r}")
        return self.categories[name]

    @property
    def all_prop_types(self) -> tuple[str, ...]:
        seen: list[str] = []
        for c in self.categories.values():
            for t in c.prop_types:
                if t not in seen:
                    seen.append(t)
        return tuple(seen)


@dataclass(frozen=True)
class Observation:
    """One abnormal finding on one concrete anatomical structure."""

    category_name: str
    structure_ref: str  # e.g. dermatome-L5-left
    values: dict[str, Value]
    note: str | None = None

    def key(self) -> tuple[str, str]:
        return (self.category_name, self.structure_ref)


@dataclass(frozen=True)
class Examination:
    date: dt.date
    observations: tuple[Observation, ...]

    def observation(self, key: tuple[str, str]) -> Observation | None:
        for o in self.observations:
            if o.key() == key:
                return o
        return None

    def on_structure(self, structure_ref: str) -> list[Observation]:
        return [o for o in self.observations if o.structure_ref == structure_ref]


@dataclass(frozen=True)
class PatientRecord:
    patient_id: str
    examinations: tuple[Examination, ...]

    @property
    def dates(self) -> tuple[dt.date, ...]:
        return tuple(e.date for e in self.examinations)

    def examination_on(self, date: dt.date) -> Examination:
        for e in self.examinations:
            if e.date == date:
                return e
        raise RecordError("unknown-date", f"no examination on {date.isoformat()}")


@dataclass(frozen=True)
class ChangeEntry:
    """One difference between two examinations.

    ``prop_type`` is None when a whole finding appeared or cleared; otherwise
    the change is about a single property value.
    """

    category: str
    structure_ref: str
    prop_type: str | None
    kind: str  # new | resolved | improved | worsened | changed
    old_value: Value | None = None
    new_value: Value | None = None

    def signature(self) -> tuple[str, str, str | None, str]:
        return (self.category, self.structure_ref, self.prop_type, self.kind)


# ---------------------------------------------------------------------------
# View registry loading


def registry_from_json(doc: dict) -> ViewRegistry:
    try:
        categories: dict[str, Category] = {}
        for c in doc["categories"]:
            props = tuple(
                Property(
                    prop_type=p["propType"],
                    data_type=p["dataType"],
                    domain=tuple(p["domain"]),
                    normal_value=p.get("normalValue"),
                )
                for p in c["props"]
            )
            cat = Category(name=c["name"], spatial_ref=c["spatialRef"], props=props)
            if cat.name in categories:
                raise RecordError("malformed-document", f"duplicate category {cat.name}")
            categories[cat.name] = cat
        views: dict[str, View] = {}
        for v in doc["views"]:
            views[v["name"]] = View(
                name=v["name"],
                categories=tuple(categories[n] for n in v["categories"]),
            )
        return ViewRegistry(categories=categories, views=views, default_view=doc["defaultView"])
    except RecordError:
        raise
    except (KeyError, TypeError) as exc:
        raise RecordError("malformed-document", f"bad view config: {exc}") from exc


def load_default_registry() -> ViewRegistry:
    """Registry shipped with the package: the disc-herniation neuro-status view."""
    text = resources.files("somaviz.data").joinpath("default_view.json").read_text("utf-8")
    return registry_from_json(json.loads(text))


# ---------------------------------------------------------------------------
# Record parsing / serialization

_RECORD_KEYS = {"patientId", "examinations"}
_EXAM_KEYS = {"date", "observations"}
_OBS_KEYS = {"category", "structure", "values", "note"}


def _structure_kind(structure_ref: str) -> str:
    return structure_ref.split("-", 1)[0]


def parse_record(data: bytes | str, registry: ViewRegistry) -> PatientRecord:
    """Parse and validate a patient record document (JSON, UTF-8).

    Rejects unknown fields, values outside a property domain, duplicated
    observations per (category, structure), non-monotonic examination dates
    and structures whose kind does not match the category's spatial reference.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise RecordError("malformed-document", "record is not UTF-8") from exc
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise RecordError("malformed-document", f"invalid JSON: {exc}") from exc
    return record_from_json(doc, registry)


def record_from_json(doc: dict, registry: ViewRegistry) -> PatientRecord:
    if not isinstance(doc, dict):
        raise RecordError("malformed-document", "record document must be an object")
    extra = set(doc) - _RECORD_KEYS
    if extra or not _RECORD_KEYS <= set(doc):
        raise RecordError("malformed-document", f"unexpected or missing record fields: {sorted(extra) or sorted(_RECORD_KEYS - set(doc))}")
    if not isinstance(doc["patientId"], str) or not doc["patientId"]:
        raise RecordError("malformed-document", "patientId must be a non-empty string")
    if not isinstance(doc["examinations"], list):
        raise RecordError("malformed-document", "examinations must be a list")

    exams: list[Examination] = []
    prev_date: dt.date | None = None
    for e in doc["examinations"]:
        if not isinstance(e, dict) or set(e) - _EXAM_KEYS or not _EXAM_KEYS <= set(e):
            raise RecordError("malformed-document", "bad examination object")
        try:
            date = dt.date.fromisoformat(e["date"])
        except (TypeError, ValueError) as exc:
            raise RecordError("malformed-document", f"bad date {e['date']!r}") from exc
        if prev_date is not None and date <= prev_date:
            raise RecordError("non-monotonic-dates", f"{date} does not follow {prev_date}")
        prev_date = date

        seen: set[tuple[str, str]] = set()
        observations: list[Observation] = []
        for o in e["observations"]:
            if not isinstance(o, dict) or set(o) - _OBS_KEYS or not {"category", "structure", "values"} <= set(o):
                raise RecordError("malformed-document", "bad observation object")
            cat = registry.category(o["category"])
            structure = o["structure"]
            if not isinstance(structure, str) or not structure:
                raise RecordError("malformed-document", "observation structure must be a non-empty string")
            if _structure_kind(structure) != cat.spatial_ref:
                raise RecordError(
                    "structure-kind-mismatch",
                    f"{structure!r} is not a {cat.spatial_ref} (category {cat.name})",
                )
            if not isinstance(o["values"], dict) or not o["values"]:
                raise RecordError("malformed-document", "observation values must be a non-empty object")
            values: dict[str, Value] = {}
            for prop_type, value in o["values"].items():
                prop = cat.prop(prop_type)
                if value not in prop.domain:
                    raise RecordError(
                        "value-outside-domain",
                        f"{value!r} outside domain of {cat.name}.{prop_type}",
                    )
                values[prop_type] = value
            obs = Observation(cat.name, structure, values, o.get("note"))
            if obs.key() in seen:
                raise RecordError("duplicate-observation", f"duplicate observation {obs.key()}")
            seen.add(obs.key())
            observations.append(obs)
        exams.append(Examination(date=date, observations=tuple(observations)))
    return PatientRecord(patient_id=doc["patientId"], examinations=tuple(exams))


def record_to_json(record: PatientRecord) -> dict:
    return {
        "patientId": record.patient_id,
        "examinations": [
            {
                "date": e.date.isoformat(),
                "observations": [
                    {
                        "category": o.category_name,
                        "structure": o.structure_ref,
                        "values": dict(o.values),
                        **({"note": o.note} if o.note is not None else {}),
                    }
                    for o in e.observations
                ],
            }
            for e in record.examinations
        ],
    }


def serialize_record(record: PatientRecord) -> bytes:
    return json.dumps(record_to_json(record), indent=2).encode("utf-8")


# ---------------------------------------------------------------------------
# Selection and temporal diff


def select_view_data(exam: Examination, view: View) -> list[Observation]:
    """Observations of the examination whose category belongs to the view."""
    names = set(view.category_names)
    return [o for o in exam.observations if o.category_name in names]


def _effective_values(obs: Observation | None, cat: Category) -> dict[str, Value]:
    """Recorded values that actually express a finding (normal values dropped)."""
    if obs is None:
        return {}
    return {t: v for t, v in obs.values.items() if v != cat.prop(t).normal_value}


def _distance_to_normal(prop: Property, value: Value) -> int:
    idx = prop.index_of(value)
    if prop.normal_value is None:
        return idx + 1
    return abs(idx - prop.index_of(prop.normal_value))


def diff_examinations(earlier: Examination, later: Examination, view: View) -> list[ChangeEntry]:
    """Change set between two examinations, restricted to the view.

    A finding that disappears, or whose remaining values all equal the normal
    value, is resolved.  Ordered values moving toward the normal value are
    improved, away from it worsened; nominal changes are reported as changed.
    """
    if not earlier.date < later.date:
        raise RecordError("non-chronological-input", "earlier examination must predate later one")

    before = {o.key(): o for o in select_view_data(earlier, view)}
    after = {o.key(): o for o in select_view_data(later, view)}
    keys = list(before.keys()) + [k for k in after.keys() if k not in before]

    entries: list[ChangeEntry] = []
    for key in keys:
        cat = view.category(key[0])
        eff_before = _effective_values(before.get(key), cat)
        eff_after = _effective_values(after.get(key), cat)
        if not eff_before and not eff_after:
            continue
        if not eff_before:
            entries.append(ChangeEntry(key[0], key[1], None, "new"))
            continue
        if not eff_after:
            entries.append(ChangeEntry(key[0], key[1], None, "resolved"))
            continue
        for prop_type in [t for t in cat.prop_types if t in eff_before or t in eff_after]:
            old = eff_before.get(prop_type)
            new = eff_after.get(prop_type)
            if old == new:
                continue
            if old is None:
                entries.append(ChangeEntry(key[0], key[1], prop_type, "new", None, new))
            elif new is None:
                entries.append(ChangeEntry(key[0], key[1], prop_type, "resolved", old, None))
            else:
                prop = cat.prop(prop_type)
                if not prop.ordered:
                    kind = "changed"
                else:
                    d_old = _distance_to_normal(prop, old)
                    d_new = _distance_to_normal(prop, new)
                    kind = "improved" if d_new < d_old else "worsened" if d_new > d_old else "changed"
                entries.append(ChangeEntry(key[0], key[1], prop_type, kind, old, new))
    return entries
