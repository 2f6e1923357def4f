"""Radiomics feature extraction: preprocessing, morphology, intensity and texture features."""
from .catalogue import CATALOGUE, Feature, UndefinedValue, lookup, undefined
from .errors import (ConfigurationError, DataError, DegenerateGeometryError, DimensionMismatchError,
                     DomainError, EmptyRoiError, InvariantError, MalformedContourError,
                     ManifoldError, RadfeatError, TruncatedFileError, UnsupportedFormatError)
from .volume import (ContourSet, GridGeometry, ImageVolume, RoiIntensitySet, RoiMask, RoiMaskPair,
                     extract_intensity_set, rasterize_contours)
from .preprocess import (DiscretisationSpec, InterpolationSpec, ResegmentationSpec, discretise,
                         interpolate, prepare_ivh, resegment)
from .morphology import compute_morphology
from .intensity import (histogram_features, ivh_features, local_intensity_features,
                        statistical_features)
from .texture import NeighbourhoodSpec, aggregate, compute_texture
from .pipeline import (FeatureReport, ProcessingConfig, load_volume, nomenclature, preset,
                       run_pipeline)

__version__ = "0.1.0"
