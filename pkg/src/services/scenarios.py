"""Reference scenarios for Type I error, power and sample size evaluation"""

from dataclasses import dataclass

from src.models.models import RsesParams, TwoGroupModel

BASE_HAZARD = 0.142
CONTROL_RESPONSE = 0.13
RESPONDER_HAZARD_RATIO = 0.4
EXPERIMENTAL_RESPONSES = (0.13, 0.26, 0.39, 0.52, 0.8)


@dataclass(frozen=True)
class NamedScenario:
    name: str
    model: TwoGroupModel


def type1_scenarios(gamma: float = BASE_HAZARD) -> list[NamedScenario]:
    """Equal triples: equal hazards at p = 0.5, responder hazard 0.4 times at p = 0.13"""
    return [
        NamedScenario("equal-hazards", TwoGroupModel.null(RsesParams(0.5, gamma, gamma))),
        NamedScenario(
            "responder-benefit",
            TwoGroupModel.null(
                RsesParams(CONTROL_RESPONSE, RESPONDER_HAZARD_RATIO * gamma, gamma)
            ),
        ),
    ]


def power_scenarios(gamma: float = BASE_HAZARD) -> list[NamedScenario]:
    """Alternatives driven by response, by response and survival, or by survival alone"""
    control = RsesParams(CONTROL_RESPONSE, RESPONDER_HAZARD_RATIO * gamma, gamma)
    scenarios = []
    for p_e in (0.26, 0.52):
        experimental = RsesParams(p_e, control.lambda1, control.lambda0)
        scenarios.append(NamedScenario(f"+resp p_E={p_e}", TwoGroupModel(experimental, control)))
        scenarios.append(
            NamedScenario(
                f"+resp +surv p_E={p_e}", TwoGroupModel(experimental.scaled(0.75), control)
            )
        )
    scenarios.append(NamedScenario("+surv", TwoGroupModel(control.scaled(0.5), control)))
    return scenarios


def _constellation_hazards(gamma: float) -> dict[int, tuple[float, float, float, float]]:
    # (lambda1_E, lambda0_E, lambda1_C, lambda0_C)
    return {
        1: (gamma, gamma, gamma, gamma),
        2: (gamma / 2, gamma, gamma, gamma),
        3: (gamma / 3, gamma, gamma, gamma),
        4: (gamma / 2, gamma / 2, gamma, gamma),
        5: (gamma / 3, gamma / 2, gamma, gamma),
        6: (gamma / 3, gamma / 2, gamma / 2, gamma),
    }


def design_constellations(
    gamma: float = BASE_HAZARD,
    p_c: float = CONTROL_RESPONSE,
    p_e_values: tuple[float, ...] = EXPERIMENTAL_RESPONSES,
) -> list[tuple[int, float, TwoGroupModel]]:
    """Six hazard constellations crossed with the experimental response probabilities

    The cell without any group difference (constellation 1 with p_E = p_C)
    is left out.
    """
    cells = []
    for constellation, (l1_e, l0_e, l1_c, l0_c) in _constellation_hazards(gamma).items():
        for p_e in p_e_values:
            if constellation == 1 and p_e == p_c:
                continue
            model = TwoGroupModel(RsesParams(p_e, l1_e, l0_e), RsesParams(p_c, l1_c, l0_c))
            cells.append((constellation, p_e, model))
    return cells
