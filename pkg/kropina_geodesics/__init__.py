__version__ = '0.1.0'

from kropina_geodesics.kropina_base import Error
from kropina_geodesics.kropina_base import KropinaStructure
from kropina_geodesics.euler_lagrange import integrate_geodesic
from kropina_geodesics.fefferman_lift import integrate_lift
from kropina_geodesics.connect import connect_points
from kropina_geodesics.model_config import structure_from_name
