from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from occlite.errors import ConfigurationError, RejectedInputError
from occlite.utils.io import StorageDtype, read_occt, write_occt


@dataclass(eq=False)
class Tensor:
    """A named dense array. Kernels work on plain `numpy` arrays; this wrapper
    is what crosses the file boundary and carries a name for diagnostics.
    """

    data: np.ndarray
    name: str | None = None

    def __post_init__(self) -> None:
        data = np.asarray(self.data)
        if not np.issubdtype(data.dtype, np.integer):
            data = data.astype(np.float64, copy=False)
            if not np.all(np.isfinite(data)):
                raise RejectedInputError(
                    f"Tensor {self.name or '<unnamed>'} holds non-finite values"
                )
        self.data = data

    @property
    def dims(self) -> list[int]:
        return list(self.data.shape)

    def save(self, filepath: str | Path, dtype: StorageDtype | None = None):
        write_occt(filepath, self.data, dtype=dtype)

    @classmethod
    def load(cls, filepath: str | Path, name: str | None = None) -> Tensor:
        return cls(read_occt(filepath), name=name or Path(filepath).stem)


@dataclass(eq=False)
class ConvParams:
    """Weights of one 2D or 3D convolution layer.

    `weight` is [C_out, C_in, k, k] or [C_out, C_in, k, k, k]; `bias` is
    [C_out]. `padding=None` means "same" padding (k-1)/2.
    """

    weight: np.ndarray
    bias: np.ndarray
    stride: int = 1
    padding: int | None = None
    name: str | None = field(default=None)

    def __post_init__(self) -> None:
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        label = self.name or "<conv>"
        if self.weight.ndim not in (4, 5):
            raise ConfigurationError(
                f"{label}: weight must have rank 4 or 5, got "
                f"{list(self.weight.shape)}"
            )
        kernel = self.weight.shape[2:]
        if len(set(kernel)) != 1:
            raise ConfigurationError(
                f"{label}: kernel must be isotropic, got {list(kernel)}"
            )
        if kernel[0] % 2 == 0:
            raise ConfigurationError(f"{label}: kernel size must be odd")
        if self.bias.shape != (self.weight.shape[0],):
            raise ConfigurationError(
                f"{label}: bias shape {list(self.bias.shape)} does not match "
                f"{self.weight.shape[0]} output channels"
            )
        if self.stride < 1:
            raise ConfigurationError(f"{label}: stride must be >= 1")
        if self.padding is not None and self.padding < 0:
            raise ConfigurationError(f"{label}: padding must be >= 0")

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def kernel_size(self) -> int:
        return self.weight.shape[2]

    @property
    def spatial_rank(self) -> int:
        return self.weight.ndim - 2

    @property
    def pad(self) -> int:
        if self.padding is None:
            return (self.kernel_size - 1) // 2
        return self.padding

    @classmethod
    def zeros(
        cls,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        spatial_rank: int = 2,
        **kwargs,
    ) -> ConvParams:
        shape = (out_channels, in_channels) + (kernel_size,) * spatial_rank
        return cls(np.zeros(shape), np.zeros(out_channels), **kwargs)

    @classmethod
    def identity(
        cls,
        in_channels: int,
        out_channels: int,
        kernel_size: int = 1,
        spatial_rank: int = 2,
        **kwargs,
    ) -> ConvParams:
        """A kernel that copies input channel i to output channel i (for i
        below both channel counts) through the kernel center.
        """
        params = cls.zeros(
            in_channels, out_channels, kernel_size, spatial_rank, **kwargs
        )
        center = (kernel_size // 2,) * spatial_rank
        for i in range(min(in_channels, out_channels)):
            params.weight[(i, i) + center] = 1.0
        return params
