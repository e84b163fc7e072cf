import os

# Timed runs compare sampler wall clocks; pin BLAS threads before numpy
# loads so the measurements are not distorted by thread-pool jitter.
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

from autoblock import _kernels  # noqa: E402

# Compile the density kernel once, outside any timed region.
_kernels.warmup()
