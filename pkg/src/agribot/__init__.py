"""agribot: deterministic pick-and-place pipeline simulator.

Camera geometry, closed-form 3-DoF arm kinematics, detection
post-processing, PID joint control, fuzzy command matching, a seeded
world simulator, and an HTTP/WebSocket service for the operator console.
"""

__version__ = "0.1.0"
