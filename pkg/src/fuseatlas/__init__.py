"""fuseatlas: a metadata-driven dataset catalog, filter, and fusion engine.

Pipeline: parse line-delimited dataset/annotation metadata, harmonize it
against controlled vocabularies, select datasets with declarative recipes or
facets, fold selections into fusion blueprints, and emit the static manifest
and audit exports the discovery portal consumes.
"""

from .errors import (
    AxisError,
    FacetError,
    FuseAtlasError,
    InvalidDimensionToken,
    InvalidInput,
    RecipeFieldError,
    RecipeParseError,
    UnknownTask,
    VocabularyError,
    WeightError,
)
from .fusion import (
    FusionBlueprint,
    GroupSummary,
    build_blueprint,
    compatibility_flags,
    labeled_ratio,
    render_blueprint_table,
    sampling_weights,
)
from .harmonize import (
    CatalogManifest,
    HarmonizedRecord,
    align_clinical,
    build_catalog,
    dedupe,
    harmonize_record,
)
from .index import (
    distribution,
    export_audit,
    export_manifest,
    load_manifest,
    yearly_totals,
)
from .query import (
    FilterRecipe,
    SelectionSet,
    evaluate_recipe,
    facet_counts,
    facet_filter,
    parse_recipe,
)
from .schema import (
    AnnotationEntry,
    CountSpec,
    DatasetRecord,
    Diagnostic,
    ValidationReport,
    canonical_serialize,
    parse_annotation_line,
    parse_dataset_meta_line,
    validate_catalog,
)
from .vocab import (
    AnatomyPath,
    ModalityCode,
    Vocabulary,
    classify_anatomy,
    classify_anatomy_multi,
    default_vocabulary,
    load_vocabulary,
    normalize_dimension,
    normalize_modality,
    normalize_task,
)

__version__ = "0.1.0"
