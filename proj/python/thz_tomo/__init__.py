"""THz tomography: Radon and full-beam forward models, linear and nonlinear reconstruction."""

from ._thz_tomo import (
    BeamContext,
    ImageGrid,
    Projector,
    ScanGeometry,
    add_noise,
    analytic_disk_sinogram,
    contour,
    disk_phantom,
    fbp,
    landweber,
    nonlinear_landweber,
    set_thread_count,
    smoothed_exp,
    tikhonov,
    triangle_phantom,
)

__version__ = "0.1.0"
