"""Vector quantization of multiband images with dialectical optimization and classification."""

from .core import Codebook, ContractError, LabelMap, MultibandImage, SearchBox, classify, quantize
from .clustering import TrainConfig, XMeansConfig, fcm_train, kmeans_train, som_train, xmeans_select
from .metrics import FidelityReport, ValidityReport, fidelity, validity
from .odc import OdcConfig, odc_classify, odc_train
from .odm import MembershipKind, OdmConfig, optimize
from .optkmeans import OptKmConfig, opt_kmeans_train
from .phantom import ClusterSpec, PhantomSpec, generate_phantom
from .stats import chi2_similarity, f_test

__version__ = "0.1.0"

__all__ = [
    "Codebook", "ContractError", "LabelMap", "MultibandImage", "SearchBox", "classify", "quantize",
    "TrainConfig", "XMeansConfig", "fcm_train", "kmeans_train", "som_train", "xmeans_select",
    "FidelityReport", "ValidityReport", "fidelity", "validity",
    "OdcConfig", "odc_classify", "odc_train",
    "MembershipKind", "OdmConfig", "optimize",
    "OptKmConfig", "opt_kmeans_train",
    "ClusterSpec", "PhantomSpec", "generate_phantom",
    "chi2_similarity", "f_test",
]
