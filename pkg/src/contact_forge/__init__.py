"""contact-forge: jet-level holomorphic contact geometry on R x C^{2n}.

Library surface: truncated Laurent/jet arithmetic, exterior calculus with
contact certificates and Reeb fields, Darboux normalization with a Moser
flow, Legendrian maps with period control, spray families, and fiberwise
symplectic linear algebra.  The ``contact-forge`` CLI drives scene files
through the same pipelines.
"""

from .charts import Chart, darboux_chart, zeta_chart
from .coords import CoordinateChange, compose_all, substitute
from .errors import *  # noqa: F401,F403 (exception names are the public contract)
from .forms import (ContactCertificate, Form, VectorFieldJet, contact_check,
                    exterior_derivative, interior_product, normal_contact_form,
                    one_form, pullback_form, reeb_field, standard_contact_form,
                    top_coefficient, wedge_power_top)
from .quadrature import Arc, Circle, Polyline, path_integral
from .series import (DEFAULT_DEGREE, DEFAULT_WINDOW, FiberMonomial,
                     JetPolynomial, Series, exp_series, jet_arith, sup_diff)
from .surfaces import (BaseMap, SurfaceModel, flow_map, homology_periods,
                       identity_map, theta_pullback)

__version__ = "0.1.0"
