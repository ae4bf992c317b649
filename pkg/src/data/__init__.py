"""
Datasets, label noise, augmentation and label correction
"""

from .synthetic import Dataset, gen_blobs, class_means, train_test_split
from .noise import (
    NoiseSpec,
    NOISE_KINDS,
    CIFAR10_PAIR_MAP,
    selection_count,
    inject,
    inject_symmetric,
    inject_asymmetric_pairs,
    inject_next_class,
)
from .augment import AugmentSpec, augment, augment_batch
from .correction import correct_labels, scaled_losses
from .storage import (
    save_dataset,
    load_dataset,
    load_sidecar,
    encode_dataset,
    decode_dataset,
    export_csv,
    import_csv,
    sidecar_path,
)

__all__ = [
    'Dataset',
    'gen_blobs',
    'class_means',
    'train_test_split',
    'NoiseSpec',
    'NOISE_KINDS',
    'CIFAR10_PAIR_MAP',
    'selection_count',
    'inject',
    'inject_symmetric',
    'inject_asymmetric_pairs',
    'inject_next_class',
    'AugmentSpec',
    'augment',
    'augment_batch',
    'correct_labels',
    'scaled_losses',
    'save_dataset',
    'load_dataset',
    'load_sidecar',
    'encode_dataset',
    'decode_dataset',
    'export_csv',
    'import_csv',
    'sidecar_path',
]
