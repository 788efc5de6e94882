"""Training-free layered image generation via seedling-latent transplantation."""

from .backend import CapabilityError, Conditioning, ToyBackend, run_denoise
from .core import (
    RandomSource,
    crop_step,
    gaussian_blur,
    laplacian_highpass,
    load_buffer,
    sample_gaussian,
    save_buffer,
)
from .masks import BoxSpec, activation_map, object_mask, retention_map, sample_box_mask
from .ntc import (
    GREEN_LATENT,
    SeedlingBundle,
    background_init,
    blend_green,
    composite_init,
    extract_seedling,
    pin_noise_bg,
    pin_noise_fg,
)
from .pipeline import (
    LayerSet,
    PipelineConfig,
    generate_layers,
    make_backend,
    place_multi_objects,
    replace_background,
)

__version__ = "0.1.0"
