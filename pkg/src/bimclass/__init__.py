"""bimclass: wireframe structure image classification toolkit.

A synthetic dataset generator, a HOG+SVM baseline, a from-scratch CNN with
random-search model selection, and a cross-validation evaluation harness.
"""

from .augment import AugmentParams, augment, hflip, rotate, shift
from .data import Dataset, load_dataset
from .errors import (
    BimclassError,
    CorruptDataError,
    DatasetError,
    InvalidArchitectureError,
    ModelKindMismatchError,
    UnsupportedFormatError,
)
from .evaluate import (
    CnnConfig,
    EvalReport,
    SvmConfig,
    accuracy,
    confusion_and_errors,
    cross_validate,
    format_accuracy,
    train_test_split,
)
from .hog import HogDescriptor, HogParams, block_normalize, cell_histograms, descriptor_length, gradients, hog_descriptor
from .image import Image, load_image, resize_bilinear, save_image, to_grayscale
from .search import (
    REFERENCE_HP,
    HyperParams,
    TrialResult,
    kfold_split,
    random_search,
    sample_hyperparams,
    write_search_ledger,
)
from .svm import (
    LinearSvmModel,
    decision_function,
    ovr_objective,
    svm_predict,
    train_linear_svm,
    train_linear_svm_batch,
)
from .synth import (
    DatasetManifest,
    ManifestEntry,
    StructureClass,
    generate_dataset,
    render_structure,
    structure_recipe,
)

__version__ = "0.1.0"
