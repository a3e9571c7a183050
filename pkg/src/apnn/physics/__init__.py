from .fields import INV_SQRT_2PI, FourierFeatures, Maxwellian, ScaleField, maxwellian
from .limit import limit_residual_mass_conservation, limit_residual_micro_macro
from .operators import electric_field, fokker_planck_L, maxwellian_jet
from .residuals import (FIELD_LAWS, field_residual, residual_mass_conservation,
                        residual_micro_macro, residual_vanilla)
