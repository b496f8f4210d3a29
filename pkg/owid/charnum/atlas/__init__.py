"""Charts, atlases, partitions of unity and nets."""
from owid.charnum.atlas.builtins import BUILTINS, builtin_manifold
from owid.charnum.atlas.charts import AtlasManifold, Chart
from owid.charnum.atlas.nets import build_separated_net, sample_manifold
from owid.charnum.atlas.partition import PartitionOfUnity, build_partition_of_unity
from owid.charnum.atlas.regularity import transition_regularity_report
from owid.charnum.atlas.spec import load_manifold_spec
from owid.charnum.atlas.transitions import TransitionMap


__all__ = [
    "AtlasManifold",
    "BUILTINS",
    "Chart",
    "PartitionOfUnity",
    "TransitionMap",
    "build_partition_of_unity",
    "build_separated_net",
    "builtin_manifold",
    "load_manifold_spec",
    "sample_manifold",
    "transition_regularity_report",
]
