from .labels import LabelCodec, encode_label
from .reporting import canonical_json, print_summary, write_report
