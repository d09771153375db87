"""Built-in scenarios reproducing the published experiments.

Each entry is a scenario file in the configuration grammar of
:mod:`gfcstab.config`. The parameter blocks are left at their defaults,
which are the experimental table with G_c read in millisiemens.
"""

from __future__ import annotations

from gfcstab.config import ScenarioConfig, parse_config

FIG4 = """
[scenario]
id = "fig4"
model = "class_b_full"
description = "class-B grid, 12 kW step of the converter-bus load; compared with the reduced model"
u_bar = "150 kW"
t_end = 10.0
tol = 1e-9
dt_out = 1e-4

[[events]]
time = 0.2
kind = "load_step"
target = "c"
value = "162 kW"
"""

FIG6_BELOW = """
[scenario]
id = "fig6_below"
model = "class_a_dc"
description = "class-A dc link at 175 kW, voltage switched 0.1 % below the low equilibrium"
u_bar = "175 kW"
t_end = 6.0
tol = 1e-9
dt_out = 1e-3
expected_outcome = "collapsed"

[[events]]
time = 0.2
kind = "state_reset"
target = "v_dc"
value = {ref = "x_bar_2", scale = 0.999}
"""

FIG6_ABOVE = """
[scenario]
id = "fig6_above"
model = "class_a_dc"
description = "class-A dc link at 175 kW, voltage switched 0.1 % above the low equilibrium"
u_bar = "175 kW"
t_end = 6.0
tol = 1e-9
dt_out = 1e-3
expected_outcome = "converged"

[[events]]
time = 0.2
kind = "state_reset"
target = "v_dc"
value = {ref = "x_bar_2", scale = 1.001}
"""

FIG7 = """
[scenario]
id = "fig7"
model = "class_b_full"
description = "class-B grid at 175 kW converter load, dc voltage switched to 90 % of the class-A low equilibrium"
u_bar = "175 kW"
t_end = 20.0
tol = 1e-8
dt_out = 1e-3
expected_outcome = "converged"

[[events]]
time = 0.2
kind = "state_reset"
target = "v_dc"
value = {ref = "x_bar_2", scale = 0.9}
"""

FIG8_CLASS_A_BELOW = """
[scenario]
id = "fig8_class_a_below"
model = "class_a"
description = "class-A grid at 175 kW, dc voltage initialised below the low equilibrium"
u_bar = "175 kW"
t_end = 6.0
tol = 1e-9
dt_out = 1e-3
expected_outcome = "collapsed"

[[events]]
time = 0.2
kind = "state_reset"
target = "v_dc"
value = {ref = "x_bar_2", scale = 0.995}
"""

FIG8_CLASS_A_ABOVE = """
[scenario]
id = "fig8_class_a_above"
model = "class_a"
description = "class-A grid at 175 kW, dc voltage initialised above the low equilibrium"
u_bar = "175 kW"
t_end = 6.0
tol = 1e-9
dt_out = 1e-3
expected_outcome = "converged"

[[events]]
time = 0.2
kind = "state_reset"
target = "v_dc"
value = {ref = "x_bar_2", scale = 1.005}
"""

FIG8_CLASS_B = """
[scenario]
id = "fig8_class_b"
model = "class_b_full"
description = "class-B grid at 175 kW, dc voltage initialised at 80 % of the class-A low equilibrium"
u_bar = "175 kW"
t_end = 20.0
tol = 1e-8
dt_out = 1e-3
expected_outcome = "converged"

[[events]]
time = 0.2
kind = "state_reset"
target = "v_dc"
value = {ref = "x_bar_2", scale = 0.8}
"""

FIG9_AB = """
[scenario]
id = "fig9_ab"
model = "class_a_dc"
description = "class-A dc link, load step 175 kW -> 177 kW (forced response)"
u_bar = "175 kW"
t_end = 1.0
tol = 1e-12
dt_out = 0.0
expected_outcome = "converged"

[[events]]
time = 0.2
kind = "load_step"
target = "c"
value = "177 kW"
"""

FIG9_CD = """
[scenario]
id = "fig9_cd"
model = "class_a_dc"
description = "class-A dc link at 177 kW, voltage switched between the low equilibrium and x_m"
u_bar = "177 kW"
t_end = 8.0
tol = 1e-9
dt_out = 1e-3
expected_outcome = "collapsed"
open_question = "the experiment reports instability for starts below x_m at 177 kW, while the region-of-attraction certificate at 177 kW contains (x_bar_2, x_m)"

[[events]]
time = 0.2
kind = "state_reset"
target = "v_dc"
value = 2430.0
"""

THM3_179 = """
[scenario]
id = "thm3_179"
model = "class_a_dc"
description = "class-A dc link, load step 175 kW -> 179 kW beyond the maximum load"
u_bar = "175 kW"
t_end = 5.0
tol = 1e-9
dt_out = 1e-3

[[events]]
time = 0.2
kind = "load_step"
target = "c"
value = "179 kW"
"""

FIG10 = """
[scenario]
id = "fig10"
model = "class_b_reduced"
description = "reduced class-B model, 12 kW load step (w = -0.08 p.u.) from rest"
u_bar = "165 kW"
t_end = 40.0
tol = 1e-10
dt_out = 1e-3
expected_outcome = "converged"

[[events]]
time = 0.2
kind = "load_step"
target = "total"
value = "312 kW"
"""

COI_HOMOGENEOUS = """
[scenario]
id = "coi_homogeneous"
model = "coi"
description = "three identical machines and three identical class-B converters, 60 kW total load step"
u_bar = "150 kW"
t_end = 40.0
tol = 1e-10
dt_out = 1e-3

[coi]
machines = 3
converters = 3

[[events]]
time = 0.2
kind = "load_step"
target = "total"
value = "960 kW"
"""

SOURCES = {
    "coi_homogeneous": COI_HOMOGENEOUS,
    "fig10": FIG10,
    "fig4": FIG4,
    "fig6_above": FIG6_ABOVE,
    "fig6_below": FIG6_BELOW,
    "fig7": FIG7,
    "fig8_class_a_above": FIG8_CLASS_A_ABOVE,
    "fig8_class_a_below": FIG8_CLASS_A_BELOW,
    "fig8_class_b": FIG8_CLASS_B,
    "fig9_ab": FIG9_AB,
    "fig9_cd": FIG9_CD,
    "thm3_179": THM3_179,
}


def scenario(name: str) -> ScenarioConfig:
    if name not in SOURCES:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(sorted(SOURCES))}")
    return parse_config(SOURCES[name])


def all_scenarios() -> list[ScenarioConfig]:
    return [scenario(name) for name in sorted(SOURCES)]
