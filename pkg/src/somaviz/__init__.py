"""In-place visualization of clinical findings on a labeled 3D avatar."""

__version__ = "0.1.0"

from .records import (  # noqa: F401
    Category,
    ChangeEntry,
    Examination,
    Observation,
    PatientRecord,
    Property,
    RecordError,
    View,
    ViewRegistry,
    diff_examinations,
    load_default_registry,
    parse_record,
    select_view_data,
    serialize_record,
)
from .mapping import (  # noqa: F401
    AttributeValue,
    MappingError,
    MappingSpec,
    ValidationReport,
    VisualAttribute,
    VisualStyle,
    alternation_schedule,
    build_default_mapping,
    encode_observation,
    map_domain_value,
    validate_mapping,
)
