//! Word pools for the synthetic corpus.

pub(crate) const ONSETS: [&str; 24] = [
    "b", "br", "c", "d", "dr", "f", "g", "gl", "k", "kr", "l", "m", "n", "p", "pl", "q", "r", "s", "st", "t", "tr",
    "v", "z", "zh",
];
pub(crate) const NUCLEI: [&str; 8] = ["a", "e", "i", "o", "u", "ai", "ou", "y"];
pub(crate) const CODAS: [&str; 10] = ["", "", "n", "x", "r", "l", "m", "s", "th", "k"];

pub(crate) const COMPANY_SUFFIXES: [&str; 6] = ["Inc.", "Corp.", "Holdings, Inc.", "Group", "Co.", "Industries"];

pub(crate) const TECH_PRODUCT_WORDS: [&str; 6] = ["Cloud", "Devices", "Pro", "Labs", "Wearables", "Platform"];
pub(crate) const MEDIA_PRODUCT_WORDS: [&str; 6] = ["Studios", "Networks", "Channel", "Live", "Records", "Parks"];
pub(crate) const RETAIL_PRODUCT_WORDS: [&str; 6] = ["Stores", "Outlet", "Home", "Kids", "Fresh", "Direct"];

pub(crate) const METAL_SEGMENTS: [&str; 9] = [
    "Copper", "Gold", "Silver", "Zinc", "Iron ore", "Nickel", "Aluminum", "Metallurgical coal", "Lithium",
];
pub(crate) const OIL_GAS_SEGMENTS: [&str; 7] = [
    "Crude oil", "Natural gas", "Natural gas liquids", "Refined products", "Liquefied natural gas", "Midstream",
    "Bitumen",
];
pub(crate) const CHEMICAL_SEGMENTS: [&str; 8] = [
    "Polyethylene", "Ethylene", "Chlor-alkali", "Titanium dioxide", "Nitrogen fertilizers", "Potash",
    "Industrial gases", "Specialty coatings",
];

/// Operating metrics reported per commodity segment.
pub(crate) const SEGMENT_METRICS: [&str; 4] = ["Average price", "Sales volume", "Production", "Unit cost"];

pub(crate) const STANDARD_LINES: [&str; 14] = [
    "Cost of sales",
    "Gross margin",
    "Research and development",
    "Selling, general and administrative",
    "Depreciation and amortization",
    "Restructuring charges",
    "Total operating expenses",
    "Operating income",
    "Interest expense",
    "Other income (expense), net",
    "Income before income taxes",
    "Provision for income taxes",
    "Net income",
    "Diluted earnings per share",
];

pub(crate) const BALANCE_SHEET_LINES: [(&str, u32); 14] = [
    ("Current assets:", 0),
    ("Cash and cash equivalents", 1),
    ("Accounts receivable, net", 1),
    ("Inventories", 1),
    ("Total current assets", 1),
    ("Property, plant and equipment, net", 0),
    ("Goodwill", 0),
    ("Total assets", 0),
    ("Current liabilities:", 0),
    ("Accounts payable", 1),
    ("Accrued expenses", 1),
    ("Long-term debt", 0),
    ("Total liabilities", 0),
    ("Total stockholders' equity", 0),
];

pub(crate) const DEBT_INSTRUMENTS: [&str; 6] = [
    "Senior notes due",
    "Senior unsecured notes due",
    "Term loan due",
    "Convertible notes due",
    "Revolving credit facility",
    "Commercial paper",
];

pub(crate) const CONSUMER_KPIS: [(&str, bool); 6] = [
    ("Active users (in millions)", false),
    ("Paid subscribers (in millions)", false),
    ("Average revenue per user", false),
    ("Comparable sales growth", true),
    ("Number of stores", false),
    ("Gross margin percentage", true),
];

pub(crate) const COMMODITY_KPIS: [(&str, bool); 5] = [
    ("Capital expenditures", false),
    ("Employees", false),
    ("Total recordable incident rate", false),
    ("Effective tax rate", true),
    ("Free cash flow", false),
];

pub(crate) const FIRST_NAMES: [&str; 24] = [
    "James", "Mary", "Robert", "Patricia", "John", "Jennifer", "Michael", "Linda", "David", "Elizabeth", "William",
    "Barbara", "Richard", "Susan", "Joseph", "Jessica", "Thomas", "Sarah", "Charles", "Karen", "Daniel", "Nancy",
    "Mark", "Lisa",
];

pub(crate) const LAST_NAMES: [&str; 24] = [
    "Smith", "Johnson", "Williams", "Brown", "Jones", "Garcia", "Miller", "Davis", "Rodriguez", "Martinez",
    "Hernandez", "Lopez", "Wilson", "Anderson", "Taylor", "Thomas", "Moore", "Jackson", "Martin", "Lee", "Thompson",
    "White", "Harris", "Clark",
];

pub(crate) const TITLES: [&str; 7] = [
    "Chief Executive Officer",
    "Chief Financial Officer",
    "Chief Operating Officer",
    "General Counsel",
    "Chairman of the Board",
    "Independent Director",
    "Chief Accounting Officer",
];

pub(crate) const MONTHS: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September", "October", "November",
    "December",
];
