from __future__ import annotations

from dataclasses import dataclass

from occlite.errors import ConfigurationError


@dataclass(frozen=True)
class HeadConfig:
    """Widths and switches of the occupancy head.

    Args:
        c1: Image feature channels.
        c2: Lifted (view-transformed) channels.
        c3: Decoded BEV channels.
        num_classes: Semantic classes M, class 0 being empty.
        grid_dims: Fine grid [H, W, Z]; every axis must be even.
        decoder_widths: Output width of each residual stage of the 2D
            decoder. Stages after the first halve the resolution.
        kernel_size: k of every non-pointwise convolution.
        c_out: Channels of the fused voxel feature V. Defaults to c3.
        seg_hidden: Hidden width of the BEV segmentation head. Defaults to
            c3.
        fcn3d_widths: Output width of each k x k x k layer of the 3D
            comparison head.
        use_interp_fusion: Concatenate interpolation-sampled image features
            before the fusion conv. When False, the fused feature is
            regressed from the repeated BEV feature alone.
        use_bev_supervision: Build the BEV segmentation head.
    """

    c1: int = 8
    c2: int = 8
    c3: int = 16
    num_classes: int = 5
    grid_dims: tuple[int, int, int] = (40, 40, 8)
    decoder_widths: tuple[int, ...] = (16, 32, 64)
    kernel_size: int = 3
    c_out: int | None = None
    seg_hidden: int | None = None
    fcn3d_widths: tuple[int, ...] = (16, 16, 16)
    use_interp_fusion: bool = True
    use_bev_supervision: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "grid_dims", tuple(self.grid_dims))
        object.__setattr__(self, "decoder_widths", tuple(self.decoder_widths))
        object.__setattr__(self, "fcn3d_widths", tuple(self.fcn3d_widths))

        if len(self.grid_dims) != 3 or any(
            n < 2 or n % 2 for n in self.grid_dims
        ):
            raise ConfigurationError(
                f"Grid dims must be three even sizes, got {self.grid_dims}"
            )
        channels = {
            "c1": self.c1,
            "c2": self.c2,
            "c3": self.c3,
            "num_classes": self.num_classes,
            "c_out": self.fused_channels,
            "seg_hidden": self.seg_channels,
        }
        for name, value in channels.items():
            if value < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {value}")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ConfigurationError(
                f"kernel_size must be odd, got {self.kernel_size}"
            )
        if not self.decoder_widths or min(self.decoder_widths) < 1:
            raise ConfigurationError("decoder_widths needs positive widths")
        if min(self.fcn3d_widths, default=1) < 1:
            raise ConfigurationError("fcn3d_widths needs positive widths")

        scale = 2 ** (self.num_stages - 1)
        h2, w2, _ = self.half_dims
        if h2 % scale or w2 % scale:
            raise ConfigurationError(
                f"A {self.num_stages}-stage decoder cannot halve a "
                f"{h2}x{w2} BEV plane {self.num_stages - 1} times"
            )

    @property
    def half_dims(self) -> tuple[int, int, int]:
        h, w, z = self.grid_dims
        return (h // 2, w // 2, z // 2)

    @property
    def num_stages(self) -> int:
        return len(self.decoder_widths)

    @property
    def collapsed_channels(self) -> int:
        """Channels of B', C2 * Z/2."""
        return self.c2 * self.half_dims[2]

    @property
    def fused_channels(self) -> int:
        return self.c3 if self.c_out is None else self.c_out

    @property
    def seg_channels(self) -> int:
        return self.c3 if self.seg_hidden is None else self.seg_hidden

    @property
    def fuse_in_channels(self) -> int:
        return self.c3 + (self.c1 if self.use_interp_fusion else 0)

    def stage_dims(self, stage: int) -> tuple[int, int]:
        """BEV size at the output of decoder stage `stage` (1-based)."""
        h2, w2, _ = self.half_dims
        factor = 2 ** (stage - 1)
        return (h2 // factor, w2 // factor)
