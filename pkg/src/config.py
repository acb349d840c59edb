# config.py

# Half-hourly metering: 48 intervals per day
STEPS_PER_DAY = 48
STEP_MINUTES = 30

# Canonical long-form CSV header, in column order
CSV_COLUMNS = ["house_id", "date", "interval", "load_kwh", "pv_kwh"]

# kWh values carry at most this many decimals so that x1000 is exact
KWH_DECIMALS = 3
KWH_WHOLE_DIGITS = 15      #longest integer kWh part; keeps Wh inside int64

# N*T*max-entry must stay below this so every in-scope sum fits comfortably in int64
ENERGY_BOUND_WH = 2 ** 40

# Default 10-house cohort, in report order
DEFAULT_HOUSE_IDS = ["2", "13", "14", "20", "33", "35", "38", "39", "56", "69"]

# Minimum up / down time in steps (1.5 h each at 30-minute steps)
MIN_UP_STEPS = 3
MIN_DOWN_STEPS = 3

# Fairness weights and count-objective coefficients are scaled by this to stay integral
WEIGHT_SCALE = 10 ** 6

# Report and task ordering of strategies
STRATEGY_ORDER = ["A", "B", "C", "A+", "B+", "C+", "SELF"]

# Branch-and-bound limits
MAX_NODES = 10 ** 7
MAX_SECONDS = 60.0

# Simplex / branch-and-bound tolerances
FEASIBILITY_TOL = 1e-9      #row residuals
PIVOT_TOL = 1e-9            #smallest usable pivot magnitude
ZERO_TOL = 1e-13            #tableau entries below this are dropped
INTEGRALITY_TOL = 1e-6      #relaxation value counts as integral within this
BOUND_SLACK = 1e-6          #added to LP bounds before flooring
BOUND_SLACK_REL = 1e-9      #relative part of the same slack
OPTIMALITY_TOL = 1e-10      #reduced-cost threshold, relative to the largest cost
DRIFT_TOL = 1e-8            #row residual that triggers a tableau rebuild
DRIFT_CHECK_EVERY = 500     #pivots between residual checks
DEGENERATE_RUN = 50         #zero-length pivots in a row before pricing falls back to Bland's rule
DEADLINE_CHECK_EVERY = 32   #simplex iterations between clock reads
CRASH_PIVOT_REL = 0.1       #crash pivots need at least this share of the row's largest entry

# Rows with positive coefficients over at most this many variables are enumerated exactly
KNAPSACK_MAX_TERMS = 12
KNAPSACK_CACHE = 200_000    #per-row memo entries before the memo is cleared

# Exhaustive oracle is limited to this many u-variables
ORACLE_MAX_VARS = 24
ORACLE_CHUNK = 2 ** 16

# Output files written by a run
OUTPUT_FILES = {
    "schedule": "schedule.csv",
    "daily": "metrics_daily.csv",
    "period": "metrics_period.csv",
    "histogram": "histogram.csv",
    "summary": "summary.json",
    "fig4": "fig4_daily_house_load_met.csv",
    "fig5": "fig5_monthly_load_met.csv",
    "fig6": "fig6_annual_house_load_met.csv",
    "sample_totals": "sample_day_totals.csv",
    "sample_steps": "sample_day_steps.csv",
}
