from .bundle import Pair, encode_pair, pair_file_name, write_bundle
from .pairs import enumerate_pairs, keyframe_edges, partition
