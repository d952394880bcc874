"""Run the bundled eCash scenarios and summarise what the bank saw."""

from blindlab.ecash.scenario import bundled_script, run_scenario
from blindlab.textfmt import parse_record

for name in ("honest_day", "double_spender", "trader_community", "trader_double_spend"):
    res = run_scenario(bundled_script(name), seed=7)
    print(f"== {name}: {'ok' if res.ok else 'FAILED'}  stats={res.stats}")
    for line in res.trace:
        if line.startswith("event=identify"):
            rec = parse_record(line)
            print("   double spend by", rec["cheater"])
    for assertion, passed, detail in res.assertions:
        print(f"   {'pass' if passed else 'FAIL'} {assertion} {detail}")
