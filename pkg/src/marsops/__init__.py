"""Settlement-scale Mars base coordination simulator."""
