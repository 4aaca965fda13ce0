from midband.antenna.upa import (
    RX_GAIN_DBI,
    SteeringDirection,
    UpaArray,
    array_gain_db,
    element_gain_db,
    elements_for_aperture,
    gain_matrix_db,
    random_steering,
    steering_grid,
    steering_vector,
)
