"""voltf: 2D transfer functions for scalar volumes.

Pipeline: load or synthesize a volume, build the joint
attenuation/gradient histogram, reduce it to 2048 network inputs, train
or apply a small MLP that places two classification filters, rasterize
the filters into an RGBA lookup table, and raycast the classified
volume. A CLI (`voltf`) and an HTTP service expose the same pipeline
for scripting and for the browser editor.
"""

from .errors import (BadFormat, BadHeader, DegenerateCamera, DimsMismatch,
                     EmptyTrainingSet, InsufficientData, InvalidFilter,
                     OutOfBounds, ShapeMismatch, SizeMismatch,
                     TargetOutOfRange, UnsupportedVersion, VoltfError,
                     WrongFilterCount)
from .volume import (GradientVolume, PhantomSpec, Volume, gradient_magnitude,
                     load_volume, make_phantom, read_volume, serialize_volume,
                     volume_header, write_volume)
from .histogram import (JointHistogram, ReducedInput, default_gradient_scale,
                        joint_histogram, lower_half_block_sums,
                        reduce_histogram, render_histogram_image)
from .transfer_function import (FilterSpec, TransferLut, filters_from_json,
                                filters_to_json, heart_preset, kernel_weight,
                                rasterize)
from .renderer import (Camera, RenderSettings, render, trilinear_sample)
from .neural import (MlpNetwork, TrainConfig, TrainReport, apply_update,
                     backprop, forward, load_model, logistic, mse, save_model,
                     train)
from .autoplace import (LearningCurveResult, TrainingSample, build_sample,
                        learning_curve, load_samples, pack_geometry,
                        predict_filters, save_samples, synthetic_heart_dataset,
                        unpack_geometry)

__version__ = "0.1.0"
