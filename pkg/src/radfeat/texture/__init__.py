from .aggregate import (ALLOWED, METHODS, AggregationMethod, TextureFeatureSet, aggregate,
                        compute_texture, method,
                        methods_for)
from .common import (DEFAULT_SPEC, Dzm, Glcm, NeighbourhoodSpec, Ngldm, Ngtdm, Rlm, Szm,
                     TextureMatrix, directions, level_volume, neighbourhood_offsets)
from .glcm import GLCM_KEYS, glcm_build, glcm_features
from .neighbourhood import (COARSENESS_CAP, NGTDM_KEYS, ngldm_build, ngldm_features, ngtdm_build,
                            ngtdm_features)
from .rlm import glrlm_build, glrlm_features
from .sized import sized_features
from .zones import gldzm_build, gldzm_distance_map, gldzm_features, glszm_build, glszm_features
