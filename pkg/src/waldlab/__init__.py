"""Random sums at non-stopping times: constructions, exact samplers and certificates."""
