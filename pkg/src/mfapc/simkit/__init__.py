from .loop import (
    ESTIMATOR_KINDS,
    FiniteDifferencePJM,
    NetworkPJM,
    TruePJM,
    example11_inputs,
    generate_training_data,
    make_estimator,
    remark2_demo,
    run_closed_loop,
)
from .plants import (
    EQ48_BLOCKS,
    Example11Plant,
    Example13Plant,
    FIRPlant,
    IncrementalLinearPlant,
    Plant,
    Remark2Plant,
    make_plant,
)
from .references import Composite, Ramp, ReferenceSignal, Sinusoid, Step, format_component, parse_component
from .trace import SimTrace
