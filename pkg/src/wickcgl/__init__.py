from .spectral import GridSpec, ModelParams, SpectralField
