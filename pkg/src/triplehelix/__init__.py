"""Triple-Helix synergy of firm distributions.

Measures the three-way mutual information among the geographic, technological
(NACE) and organizational (size class) distributions of firms, and decomposes
it over territorial partitions into within-group and between-group terms.
"""
from .decomp import (
    MultiLevelReport,
    SynergyDecomposition,
    decompose,
    decompose_by,
    multi_level_report,
    percent_contributions,
)
from .infocore import (
    ContingencyTensor,
    Distribution,
    GeoLevel,
    TensorConfig,
    build_tensor,
    entropy,
    mutual_info_2,
    mutual_info_3,
    to_millibits,
)
from .ingest import FirmRecord, IngestReport, Schema, bin_size_class, normalize_nace, parse_firms, validate_dataset
from .sectors import filter_by_sector, sector_report, spearman_rho
from .synthgen import SynthSpec, generate, oracle_synergy
from .tally import FirmTally, scan_csv
from .taxonomy import (
    GeoTaxonomy,
    Partition,
    SectorTaxonomy,
    classify_sector,
    default_geo_taxonomy,
    default_sector_taxonomy,
    load_geo_config,
    load_sector_config,
    resolve_unit,
)

__version__ = "0.1.0"
