"""Write data/adult/adult.schema.json.

Category lists come from the UCI ``adult.names`` documentation; the three
columns documented to have unknown values get a ``missing`` bucket. Numeric
columns get 10 equal-width bins over their documented ranges. Nothing here
reads the census records, so the encoding is data-independent.
"""

from pathlib import Path

from dpboost.data import ColumnSpec, EncodingSchema, propose_equal_width_bins, save_schema

CATEGORIES = {
    "workclass": ["Private", "Self-emp-not-inc", "Self-emp-inc", "Federal-gov",
                  "Local-gov", "State-gov", "Without-pay", "Never-worked", "missing"],
    "education": ["Bachelors", "Some-college", "11th", "HS-grad", "Prof-school",
                  "Assoc-acdm", "Assoc-voc", "9th", "7th-8th", "12th", "Masters",
                  "1st-4th", "10th", "Doctorate", "5th-6th", "Preschool"],
    "marital-status": ["Married-civ-spouse", "Divorced", "Never-married", "Separated",
                       "Widowed", "Married-spouse-absent", "Married-AF-spouse"],
    "occupation": ["Tech-support", "Craft-repair", "Other-service", "Sales",
                   "Exec-managerial", "Prof-specialty", "Handlers-cleaners",
                   "Machine-op-inspct", "Adm-clerical", "Farming-fishing",
                   "Transport-moving", "Priv-house-serv", "Protective-serv",
                   "Armed-Forces", "missing"],
    "relationship": ["Wife", "Own-child", "Husband", "Not-in-family", "Other-relative",
                     "Unmarried"],
    "race": ["White", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other", "Black"],
    "sex": ["Female", "Male"],
    "native-country": [
        "United-States", "Cambodia", "England", "Puerto-Rico", "Canada", "Germany",
        "Outlying-US(Guam-USVI-etc)", "India", "Japan", "Greece", "South", "China",
        "Cuba", "Iran", "Honduras", "Philippines", "Italy", "Poland", "Jamaica",
        "Vietnam", "Mexico", "Portugal", "Ireland", "France", "Dominican-Republic",
        "Laos", "Ecuador", "Taiwan", "Haiti", "Columbia", "Hungary", "Guatemala",
        "Nicaragua", "Scotland", "Thailand", "Yugoslavia", "El-Salvador",
        "Trinadad&Tobago", "Peru", "Hong", "Holand-Netherlands", "missing"],
}

RANGES = {
    "age": (17, 90),
    "fnlwgt": (10000, 1500000),
    "education-num": (1, 16),
    "capital-gain": (0, 100000),
    "capital-loss": (0, 4500),
    "hours-per-week": (1, 99),
}

ORDER = ["age", "workclass", "fnlwgt", "education", "education-num", "marital-status",
         "occupation", "relationship", "race", "sex", "capital-gain", "capital-loss",
         "hours-per-week", "native-country"]


def build() -> EncodingSchema:
    cols = []
    for name in ORDER:
        if name in CATEGORIES:
            cols.append(ColumnSpec(name, "categorical", tuple(CATEGORIES[name])))
        else:
            lo, hi = RANGES[name]
            cols.append(ColumnSpec(name, "numeric", bins=tuple(propose_equal_width_bins(lo, hi, 10))))
    return EncodingSchema(tuple(cols), "income", ">50K")


if __name__ == "__main__":
    schema = build()
    out = Path(__file__).resolve().parent.parent / "data" / "adult" / "adult.schema.json"
    save_schema(schema, out)
    print(f"{out}: {schema.n_features} features")
