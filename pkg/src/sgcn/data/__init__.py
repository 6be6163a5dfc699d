from .datasets import Dataset, load_dataset, load_mnist, load_molecules
from .idx import IMAGE_MAGIC, LABEL_MAGIC, IdxFormatError, read_idx_images, read_idx_labels, write_idx
from .molecules import ATOM_VOCAB, FEATURE_NAMES, N_FEATURES, append_positions, atom_features, featurize
from .sdf import MolRecord, SdfFormatError, format_record, parse_sdf, read_sdf, write_sdf
from .tables import DatasetSplit, LabelTable, load_labels, make_split, read_split, write_split
