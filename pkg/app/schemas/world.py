"""World (physics) configuration."""
from enum import Enum

from pydantic import Field

from app.schemas.base import ConfigModel

SLAB_THICKNESS = 0.036
CYLINDER_DIAMETER = 0.02


class GeometryProfile(str, Enum):
    RECTANGULAR_SLAB = "slab"
    THIN_CYLINDER = "cylinder"


class WorldConfig(ConfigModel):
    gravity: float = Field(9.81, gt=0)  # magnitude, pointing -z
    dt: float = Field(0.01, gt=0)
    substeps: int = Field(10, ge=1)

    rod_length: float = Field(0.72, gt=0)
    rod_thickness: float = Field(SLAB_THICKNESS, gt=0)
    rod_mass: float = Field(0.5, gt=0)
    geometry_profile: GeometryProfile = GeometryProfile.RECTANGULAR_SLAB

    # Pedestal table centred at x = 0; the rod overhangs it at both ends
    table_height: float = Field(0.40, gt=0)
    table_width: float = Field(0.40, gt=0)

    contact_stiffness: float = Field(5e3, gt=0)
    contact_damping: float = Field(50.0, gt=0)
    friction_mu: float = Field(0.8, gt=0)
    friction_damping: float = Field(50.0, gt=0)

    gripper_force_scale: float = Field(1.0, gt=0)
    finger_radius: float = Field(0.01, gt=0)
    aperture_max: float = Field(0.08, gt=0)
    grasp_offset: float = Field(0.28, gt=0)
    servo_time_constant: float = Field(0.05, gt=0)
    pinch_damping: float = Field(50.0, gt=0)
    aperture_open_rate: float = Field(0.1, gt=0)
    f_grasp_min: float = Field(0.5, gt=0)

    @property
    def h(self) -> float:
        """Integration substep."""
        return self.dt / self.substeps

    @property
    def rod_contact_stiffness(self) -> float:
        # Curved, lower-area contact of the cylinder profile
        if self.geometry_profile is GeometryProfile.THIN_CYLINDER:
            return 0.5 * self.contact_stiffness
        return self.contact_stiffness

    @property
    def rod_inertia(self) -> float:
        m, length, t = self.rod_mass, self.rod_length, self.rod_thickness
        if self.geometry_profile is GeometryProfile.THIN_CYLINDER:
            return m * (length**2 / 12.0 + t**2 / 16.0)
        return m * (length**2 + t**2) / 12.0

    @property
    def rest_height(self) -> float:
        return self.table_height + 0.5 * self.rod_thickness
