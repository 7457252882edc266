import pytest

from chainlog import Cluster, EncodingMode, TsIndexParams, parse_log_line
from chainlog.bench import load_cluster

# The four running-example records used throughout the unit tests. Row 2 is
# a follow-up of row 1 (same User/Resource, Ref-ID points back at it).
SAMPLE_LINES = [
    "152202801 1 1 1 1 REQ_RESOURCE MOD_FlyBase",
    "152208352 1 2 1 1 VIEW_RESOURCE MOD_FlyBase",
    "152216966 1 3 3 6 FILE_ACCESS GTEx",
    "152237149 1 9 9 10 REQ_RESOURCE MOD_SGD",
]

SMALL_PARAMS = TsIndexParams(levels=3, multiplier=10)


@pytest.fixture
def sample_records():
    return [parse_log_line(line) for line in SAMPLE_LINES]


def make_store(records, mode: EncodingMode, n_nodes: int = 1,
               batch_limit: int = 512) -> Cluster:
    """Cluster with the records inserted and confirmed."""
    cluster = Cluster(n_nodes, batch_limit)
    load_cluster(cluster, records, mode)
    return cluster
