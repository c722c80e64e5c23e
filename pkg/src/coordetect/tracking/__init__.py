"""Radar-side models: waveform covariances, Kalman/Riccati analysis and JPDA tracking."""

from .jpdaf import (AssociationEvent, ClutterModel, EventPosterior, StackedBelief, TooLarge,
                    ValidationMatrix, ZeroTotalMass, enumerate_events, event_posterior_coupled,
                    event_posterior_uncoupled, gate, jpdacf_update, pda_update)
from .kalman import (GaussianBelief, LinearGaussianModel, NoConvergence, NotDetectable,
                     NotStabilizable, SingularInnovation, kalman_step, precision, solve_are)
from .waveform import InvalidParams, WaveformSpec, probe_from_covariance, waveform_covariance
