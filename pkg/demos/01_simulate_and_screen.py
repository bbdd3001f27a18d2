"""
Simulating a rating survey and cleaning it
==========================================

A synthetic survey stands in for crowdsourced data: five stimuli rated on
31 adjectives, one of them worded negatively. We write it to CSV, read it
back, drop careless respondents and build one rating matrix per stimulus.
"""

import io

import numpy as np

from likertkit import (ItemCatalog, build_matrix, read_survey_csv, screen_respondents,
                       simulate_survey, write_survey_csv)
from likertkit.cli import simulation_specs

# the default design: 200 respondents per stimulus, latent means stepping down
specs, seed, reversed_items = simulation_specs({"seed": 7})
raw = simulate_survey(specs, seed=seed, reversed_items=reversed_items)
print(f"simulated {len(raw.rows)} rows for stimuli {raw.stimuli}")
print(f"negatively worded items: {reversed_items}")

# a round trip through the wide CSV format used by the command line tool
buf = io.StringIO()
write_survey_csv(raw, buf)
print(buf.getvalue().splitlines()[0][:90], "...")
raw = read_survey_csv(io.StringIO(buf.getvalue()))

# respondents failing two or more attention checks, or rating a stimulus twice, go
screened, report = screen_respondents(raw, max_failed_checks=2)
print(f"kept {report.respondents_after} of {report.respondents_before} respondents")
for ex in report.exclusions[:5]:
    print(f"  dropped {ex.respondent_id}: {ex.reason}")

# the catalog knows which items to reverse score (x -> 8 - x on a 1..7 scale)
catalog = ItemCatalog.bundled("exploratory")
first = build_matrix(screened, screened.stimuli[0], catalog)
raw_col = np.array([r.responses["cluttered"] for r in screened.rows_for(first.stimulus_id)])
print(f"{first.stimulus_id}: {first.n} respondents x {first.p} items")
print(f"cluttered raw mean {raw_col.mean():.2f}, "
      f"reverse scored {first.column('cluttered').mean():.2f}")
