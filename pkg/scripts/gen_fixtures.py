#!/usr/bin/env python3
"""Regenerate the bundled assets: demo corpus, intent dataset, language-ID
seed corpora and evaluation set, phrase table, lexicon, gazetteer, tool
registry, and trilingual query suite.

Run from the repo root:  python3 scripts/gen_fixtures.py
The script finishes with a self-check section; every line must say OK.
"""

from __future__ import annotations

import json
import math
import random
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
ASSETS = REPO / "src" / "aloha" / "assets"

# ---------------------------------------------------------------------------
# Demo corpus
# ---------------------------------------------------------------------------

TS = {
    "2023-12-20": 1703030400,
    "2024-05-20": 1716163200,
    "2024-08-15": 1723680000,
    "2024-09-01": 1725148800,
    "2024-09-10": 1725926400,
    "2024-10-10": 1728518400,
    "2024-12-18": 1734480000,
    "2025-01-05": 1736035200,
}

CONCEPTS = [
    {
        "id": "c-sis",
        "kind": "Concept",
        "title": "国际关系学院",
        "body": "国际关系学院开设国际政治、外交学与国际组织等方向，面向本科生和研究生招生，毕业生多进入涉外部门、国际组织和研究机构工作。",
        "source_url": "https://campus.example/schools/sis",
        "timestamp": TS["2024-09-01"],
        "is_location": True,
    },
    {
        "id": "c-canteen-xinyuan",
        "kind": "Concept",
        "title": "新缘食堂",
        "body": "新缘食堂位于校园北区，紧邻运动场，共两层。一层是自选餐区，供应多种家常菜和时令蔬菜；二层设有面食、烧腊和清真档口。食堂每周更换菜单，价格实惠。",
        "source_url": "https://campus.example/life/canteen-xinyuan",
        "timestamp": TS["2024-08-15"],
        "is_location": True,
    },
    {
        "id": "c-canteen-yannan",
        "kind": "Concept",
        "title": "颐年食堂",
        "body": "颐年食堂分为一层大厅、二层餐厅和地下咖啡厅三个部分，可容纳约八百人同时就餐，以家常菜和面食见长。",
        "source_url": "https://campus.example/life/canteen-yannan",
        "timestamp": TS["2024-08-15"],
        "is_location": True,
    },
    {
        "id": "c-library",
        "kind": "Concept",
        "title": "图书馆",
        "body": "图书馆馆藏纸质文献超过八百万册，设有多个阅览区、研讨间和自习空间，入馆需要刷校园卡。",
        "source_url": "https://campus.example/places/library",
        "timestamp": TS["2024-09-01"],
        "is_location": True,
    },
]

QA_PAIRS = [
    {
        "id": "q-wired",
        "kind": "QAPair",
        "title": "学生宿舍如何接入有线校园网",
        "body": "在网络服务大厅申请上网账号后，把网线接入墙面端口，再用账号完成认证即可上网，无需其他配置。",
        "source_url": "https://campus.example/help/network-faq",
        "timestamp": TS["2024-09-10"],
    },
    {
        "id": "q-busy",
        "kind": "QAPair",
        "title": "哪个食堂人比较少",
        "body": "可以查看食堂拥挤指数页面，了解各个餐厅的实时人流量，错开高峰时段就餐更加从容。",
        "source_url": "https://campus.example/help/dining-faq",
        "timestamp": TS["2024-09-10"],
    },
    {
        "id": "q-card",
        "kind": "QAPair",
        "title": "如何办理校园卡",
        "body": "新生在迎新系统预约后，携带录取通知书和身份证件到卡务中心办理校园卡，立等可取。",
        "source_url": "https://campus.example/help/card-faq",
        "timestamp": TS["2024-09-01"],
    },
]

WEB_PAGES = [
    {
        "id": "w-seminar",
        "kind": "WebPage",
        "title": "讲座通知：校园数据网络与智能运维",
        "body": "时间：5月30日（周四）10:00-11:00。地点：理科一号楼B101。摘要：介绍校园数据网络的架构演进与智能运维实践，并演示常见故障的排查思路。",
        "source_url": "https://campus.example/news/seminar-network-ops",
        "timestamp": TS["2024-05-20"],
    },
    {
        "id": "w-vacation-2024",
        "kind": "WebPage",
        "title": "2024年寒假放假安排的通知",
        "body": "2024年寒假自1月15日开始，2月25日结束。留校学生需要提前在系统中登记，宿舍区照常供暖。",
        "source_url": "https://campus.example/news/winter-2024",
        "timestamp": TS["2023-12-20"],
    },
    {
        "id": "w-vacation-2025",
        "kind": "WebPage",
        "title": "2025年寒假放假安排的通知",
        "body": "2025年寒假自1月13日开始，2月21日结束。留校学生需要提前在系统中登记，宿舍区照常供暖。",
        "source_url": "https://campus.example/news/winter-2025",
        "timestamp": TS["2024-12-18"],
    },
    {
        "id": "w-network",
        "kind": "WebPage",
        "title": "校园网络维护公告",
        "body": "本周六凌晨0点至6点进行核心交换机升级，期间校园网和无线网络服务可能出现短暂中断，请提前安排。",
        "source_url": "https://campus.example/news/network-maintenance",
        "timestamp": TS["2024-10-10"],
    },
]

TABULAR = [
    {
        "id": "t-yannan-hours",
        "kind": "Tabular",
        "title": "颐年食堂开放时间表",
        "table": {
            "caption": "颐年食堂各区域开放时间",
            "header": ["区域", "餐段", "时间"],
            "rows": [
                ["一层大厅", "早餐、午餐、晚餐", "06:30-19:30"],
                ["二层餐厅", "午餐、晚餐", "10:45-19:30"],
                ["地下咖啡厅", "全天", "08:00-22:00"],
            ],
        },
        "source_url": "https://campus.example/life/canteen-yannan-hours",
        "timestamp": TS["2024-09-10"],
        "intent_tag": "Opening Schedule of Buildings",
    },
    {
        "id": "t-holiday-service",
        "kind": "Tabular",
        "title": "寒假期间楼宇服务安排表",
        "table": {
            "caption": "寒假期间主要楼宇服务安排",
            "header": ["楼宇", "开放日期", "开放时间"],
            "rows": [
                ["图书馆", "每日", "08:00-17:00"],
                ["体育馆", "周一至周五", "09:00-16:00"],
                ["第一教学楼", "闭馆检修", "暂停开放"],
            ],
        },
        "source_url": "https://campus.example/facilities/holiday-service",
        "timestamp": TS["2024-12-18"],
        "intent_tag": "Service Schedule of Buildings during Holiday Period",
    },
    {
        "id": "t-intercity",
        "kind": "Tabular",
        "title": "市际交通费报销标准表",
        "table": {
            "caption": "出差乘坐交通工具等级标准",
            "header": ["人员级别", "火车", "飞机"],
            "rows": [
                ["院士及同级人员", "一等座或商务座", "头等舱"],
                ["教授、副教授", "一等座", "经济舱"],
                ["其他人员", "二等座", "经济舱"],
            ],
        },
        "source_url": "https://campus.example/finance/intercity-transport",
        "timestamp": TS["2024-09-01"],
        "intent_tag": "Inter-City Transportation Expense",
    },
    {
        "id": "t-hotel",
        "kind": "Tabular",
        "title": "出差住宿费报销标准表",
        "table": {
            "caption": "出差住宿费限额（每人每天）",
            "header": ["城市类别", "部级及院士", "其他人员"],
            "rows": [
                ["一线城市", "1100元", "500元"],
                ["其他城市", "800元", "350元"],
            ],
        },
        "source_url": "https://campus.example/finance/hotel-standard",
        "timestamp": TS["2024-09-01"],
        "intent_tag": "Accommodation Expense",
    },
]

CORPUS = CONCEPTS + QA_PAIRS + WEB_PAGES + TABULAR

# ---------------------------------------------------------------------------
# Intent dataset: 11 classes x 26 paraphrases
# ---------------------------------------------------------------------------

INTENT_STEMS: dict[str, list[str]] = {
    "Routine Reimbursement": [
        "日常办公用品的发票怎么报销",
        "实验室耗材报销需要什么材料",
        "日常报销的流程是什么",
        "购买打印纸可以走日常报销吗",
        "办公费用报销单怎么填写",
        "日常报销需要负责人签字吗",
        "水电费报销多久能到账",
    ],
    "Reimbursement for Software Development or Purchase": [
        "购买正版软件怎么报销",
        "软件开发费用可以报销吗",
        "软件许可证的采购费用如何报销",
        "委托开发软件的合同款怎么报销",
        "购置数据库软件报销需要什么凭证",
        "软件年度维护费能报销吗",
        "课题组买软件走什么报销科目",
    ],
    "Inter-City Transportation Expense": [
        "我可以报销一等座火车票吗",
        "去上海出差的高铁票能报销多少",
        "市际交通费的报销标准是什么",
        "出差乘坐飞机经济舱怎么报销",
        "城际出差的车票需要保留原件吗",
        "出差往返火车票报销有上限吗",
        "出差打车到外地机场的费用怎么算",
    ],
    "International Transportation Expense": [
        "出国参会的国际机票怎么报销",
        "国际航班的舱位等级有什么限制",
        "去巴黎开会的机票报销标准是什么",
        "国际交通费需要提前审批吗",
        "国际转机产生的费用可以报销吗",
        "出境旅费的报销凭证有哪些",
        "国际机票改签费能报销吗",
    ],
    "Accommodation Expense": [
        "出差住宿费的标准是每晚多少",
        "在北京出差的酒店费用怎么报销",
        "住宿费超标的部分能报销吗",
        "参加会议期间的住宿发票如何处理",
        "住宿费报销需要酒店水单吗",
        "教授出差的住宿限额是多少",
        "出差住民宿可以开住宿发票报销吗",
    ],
    "Field Investigation Expense": [
        "野外考察的补助标准是什么",
        "去野外采样的费用怎么报销",
        "实地调研的食宿开支怎么计算",
        "野外考察费需要什么审批手续",
        "考察期间的租车费用能报销吗",
        "地质考察的装备购置费怎么处理",
        "野外科考补助按天发放吗",
    ],
    "Conference Expense": [
        "举办学术会议的费用怎么报销",
        "会议费的开支范围包括什么",
        "参加学术会议的注册费能报销吗",
        "会议费报销需要附会议通知吗",
        "办会的场地租金算会议费吗",
        "会议期间餐费的标准是多少",
        "线上会议的平台使用费能走会议费吗",
    ],
    "Expert Consultation Expense": [
        "专家咨询费的发放标准是什么",
        "请校外专家评审的劳务报酬怎么发",
        "专家咨询费需要代扣个税吗",
        "院士级专家的咨询费标准是多少",
        "评审专家的咨询费怎么申请",
        "发放咨询费需要专家签到表吗",
        "专家论证会的咨询费怎么入账",
    ],
    "Service Expense for Off-Campus Personnel": [
        "校外人员的劳务费怎么发放",
        "给校外助研发放劳务费需要什么材料",
        "校外人员劳务费的税率是多少",
        "临时聘用校外人员的报酬怎么处理",
        "校外人员劳务费有发放上限吗",
        "劳务费可以发给校外学生吗",
        "校外兼职人员的劳务费多久发一次",
    ],
    "Opening Schedule of Buildings": [
        "图书馆的开放时间是什么",
        "体育馆每天几点开门",
        "食堂的开放时间是几点到几点",
        "教学楼晚上几点关门",
        "实验楼周末开放吗",
        "游泳馆的开放时间表在哪里看",
        "自习室最晚开到几点",
    ],
    "Service Schedule of Buildings during Holiday Period": [
        "寒假期间图书馆的服务安排是什么",
        "国庆假期食堂开放吗",
        "暑假期间体育馆的开放安排是怎样的",
        "假期里教学楼会关闭吗",
        "春节期间校医院的服务时间是什么",
        "假期楼宇服务安排在哪里查询",
        "五一假期实验室能进吗",
    ],
}

PERSONAS = ["我是一名正教授。", "我是新入学的博士生。", "我是学院的行政助理。", "我是大一新生。"]
POLITE = ["请问", "麻烦问一下", "想了解一下"]

TARGET_PER_CLASS = 26


def build_intent_dataset() -> list[dict]:
    """Deterministic 26 paraphrases per class: stems, persona-prefixed,
    politeness-prefixed, and statement-suffixed variants."""
    rows = []
    for label, stems in INTENT_STEMS.items():
        variants: list[str] = []
        variants.extend(stems)
        for i, stem in enumerate(stems):
            variants.append(PERSONAS[i % len(PERSONAS)] + stem)
        for i, stem in enumerate(stems):
            variants.append(POLITE[i % len(POLITE)] + stem)
        for stem in stems:
            variants.append(stem + "，谢谢")
        seen = set()
        unique = []
        for v in variants:
            if v not in seen:
                seen.add(v)
                unique.append(v)
        assert len(unique) >= TARGET_PER_CLASS, f"{label}: only {len(unique)} variants"
        for i, text in enumerate(unique[:TARGET_PER_CLASS]):
            slug = label.lower().replace(" ", "-").replace(",", "")
            rows.append({"id": f"{slug}-{i:03d}", "text": text, "label": label})
    return rows


def split_dataset(rows: list[dict]) -> tuple[list[dict], list[dict]]:
    """Global 80/20 split, test side rounded up, seeded shuffle."""
    rng = random.Random(20240901)
    shuffled = rows[:]
    rng.shuffle(shuffled)
    test_size = math.ceil(len(rows) * 0.2)
    test = sorted(shuffled[:test_size], key=lambda r: r["id"])
    train = sorted(shuffled[test_size:], key=lambda r: r["id"])
    return train, test


# ---------------------------------------------------------------------------
# Language-ID seed corpora and evaluation set
# ---------------------------------------------------------------------------

EN_SUBJECTS = [
    "The library", "The main gym", "The dining hall", "The registrar office", "The health center",
    "The computer lab", "The student union", "The swimming pool", "The west gate", "The lecture hall",
    "The printing room", "The career center",
]
EN_PREDICATES = [
    "opens at eight in the morning during the semester.",
    "is closed on public holidays and weekends.",
    "requires a campus card for entry after ten at night.",
    "publishes its schedule on the university portal.",
    "offers extended hours during the examination weeks.",
    "is located next to the main teaching building.",
    "closes earlier on Friday evenings.",
    "stays open until midnight in the exam season.",
    "accepts reservations through the mobile application.",
    "is staffed by student volunteers on weekends.",
    "posts announcements near the main entrance.",
    "checks student cards at the front desk.",
    "provides free drinking water on every floor.",
    "arranges a guided tour for new students.",
]
EN_EXTRA = [
    "Students can reserve study rooms online up to three days in advance.",
    "New undergraduates should complete registration before the orientation week.",
    "Please bring your admission letter when you apply for a campus card.",
    "Reimbursement forms must be signed by the project leader first.",
    "The shuttle bus between the two campuses runs every half hour.",
    "You can check the cafeteria menu in the mobile application.",
    "The winter vacation usually starts in the middle of January.",
    "Graduate students may borrow up to forty books at a time.",
    "The career center offers resume workshops every Friday afternoon.",
    "Lost cards can be replaced at the service desk within one day.",
]

FR_SUBJECTS = [
    "La bibliothèque", "Le gymnase principal", "La cantine", "Le bureau des inscriptions", "Le centre de santé",
    "La salle informatique", "Le foyer des étudiants", "La piscine", "La porte ouest", "L'amphithéâtre",
    "La salle d'impression", "Le centre des carrières",
]
FR_PREDICATES = [
    "ouvre à huit heures du matin pendant le semestre.",
    "n'ouvre pas les jours fériés ni le week-end.",
    "exige une carte de campus après vingt-deux heures.",
    "publie ses horaires sur le portail de l'université.",
    "propose des horaires étendus pendant la période des examens.",
    "se trouve à côté du bâtiment principal des cours.",
    "ferme plus tôt le vendredi soir.",
    "reste accessible jusqu'à minuit pendant les examens.",
    "accepte les réservations via l'application mobile.",
    "accueille des bénévoles étudiants le week-end.",
    "affiche les annonces près de l'entrée principale.",
    "vérifie la carte d'étudiant à l'accueil.",
    "met de l'eau potable à disposition à chaque étage.",
    "organise une visite guidée pour les nouveaux étudiants.",
]
FR_EXTRA = [
    "Les étudiants peuvent réserver une salle de travail trois jours à l'avance.",
    "Les nouveaux étudiants doivent finir leur inscription avant la semaine d'accueil.",
    "Veuillez apporter votre lettre d'admission pour demander la carte de campus.",
    "Les demandes de remboursement doivent être signées par le responsable du projet.",
    "La navette entre les deux campus passe toutes les trente minutes.",
    "Vous pouvez consulter le menu de la cantine dans l'application mobile.",
    "Les vacances d'hiver commencent généralement à la mi-janvier.",
    "Les doctorants peuvent emprunter jusqu'à quarante livres à la fois.",
    "Le centre des carrières organise des ateliers de CV chaque vendredi après-midi.",
    "Une carte perdue peut être remplacée au guichet en une journée.",
]

ZH_SUBJECTS = [
    "图书馆", "体育馆", "食堂", "注册中心", "校医院", "机房",
    "学生活动中心", "游泳馆", "西门", "大讲堂", "打印室", "就业指导中心",
]
ZH_PREDICATES = [
    "在学期内早上八点开门。",
    "在法定节假日和周末闭馆。",
    "晚上十点以后需要刷校园卡进入。",
    "的时间安排会发布在学校门户网站上。",
    "在考试周会延长开放时间。",
    "位于主教学楼旁边。",
    "周五晚上会提前关门。",
    "在考试期间开放到午夜。",
    "可以通过手机应用预约。",
    "周末由学生志愿者值班。",
    "会在入口处张贴通知。",
    "在前台查验学生证。",
    "每层都提供免费饮用水。",
    "会为新生安排参观活动。",
]
ZH_EXTRA = [
    "学生可以提前三天在网上预约研讨间。",
    "新生需要在迎新周之前完成注册。",
    "办理校园卡时请携带录取通知书。",
    "报销单需要先由项目负责人签字。",
    "两个校区之间的班车每半小时一班。",
    "可以在手机应用里查看食堂菜单。",
    "寒假一般在一月中旬开始。",
    "研究生一次最多可以借四十本书。",
    "就业指导中心每周五下午举办简历工作坊。",
    "校园卡丢失后可以在服务台一天内补办。",
]


def _compose(subjects: list[str], predicates: list[str], zh: bool = False) -> list[str]:
    """All subject x predicate combinations, diagonal-striped so neighboring
    sentences do not share a subject."""
    joiner = "" if zh else " "
    out = []
    for offset in range(len(predicates)):
        for i, subject in enumerate(subjects):
            predicate = predicates[(i + offset) % len(predicates)]
            out.append(f"{subject}{joiner}{predicate}")
    seen = set()
    unique = []
    for s in out:
        if s not in seen:
            seen.add(s)
            unique.append(s)
    return unique


def build_langid_sets() -> tuple[dict[str, list[str]], list[dict]]:
    """Seeds (profile training) and a disjoint 300-sentence evaluation set."""
    en_all = _compose(EN_SUBJECTS, EN_PREDICATES)
    fr_all = _compose(FR_SUBJECTS, FR_PREDICATES)
    zh_all = _compose(ZH_SUBJECTS, ZH_PREDICATES, zh=True)
    for pool in (en_all, fr_all, zh_all):
        assert len(pool) >= 140, f"sentence grid too small: {len(pool)}"
    seeds = {
        "en": en_all[:40] + EN_EXTRA,
        "fr": fr_all[:40] + FR_EXTRA,
        "zh": zh_all[:40] + ZH_EXTRA,
    }
    eval_set = (
        [{"lang": "zh", "text": t} for t in zh_all[40:140]]
        + [{"lang": "en", "text": t} for t in en_all[40:140]]
        + [{"lang": "fr", "text": t} for t in fr_all[40:140]]
    )
    return seeds, eval_set


# ---------------------------------------------------------------------------
# Trilingual query suite and phrase table
# ---------------------------------------------------------------------------

TRILINGUAL = [
    ("q01", "新缘食堂在哪里", "Where is Canteen Xinyuan?", "Où se trouve la Cantine Xinyuan ?"),
    ("q02", "介绍国际关系学院", "Please introduce the School of International Studies", "Présentez l'École des études internationales"),
    ("q03", "颐年食堂的开放时间是几点", "What are the opening hours of Canteen Yannan?", "Quels sont les horaires d'ouverture de la cantine Yannan ?"),
    ("q04", "我可以报销一等座火车票吗", "Can I reimburse first-class train tickets?", "Puis-je me faire rembourser des billets de train en première classe ?"),
    ("q05", "学生宿舍如何接入有线校园网", "How do I connect to the wired campus network in my dormitory?", "Comment me connecter au réseau filaire du campus depuis mon dortoir ?"),
    ("q06", "寒假什么时候开始", "When does the winter vacation start?", "Quand commencent les vacances d'hiver ?"),
    ("q07", "哪个食堂人比较少", "Which canteen has fewer people right now?", "Quelle cantine est la moins fréquentée ?"),
    ("q08", "如何办理校园卡", "How do I get a campus card?", "Comment obtenir une carte de campus ?"),
    ("q09", "图书馆的开放时间是什么", "What are the opening hours of the library?", "Quels sont les horaires d'ouverture de la bibliothèque ?"),
    ("q10", "出差住宿费的标准是每晚多少", "What is the hotel allowance per night on business trips?", "Quel est le plafond d'hébergement par nuit en mission ?"),
    ("q11", "国庆假期体育馆开放吗", "Is the gym open during the National Day holiday?", "Le gymnase est-il ouvert pendant les vacances nationales ?"),
    ("q12", "专家咨询费的发放标准是什么", "What is the payment standard for expert consultation fees?", "Quelle est la norme de paiement des honoraires de consultation d'experts ?"),
    ("q13", "参加学术会议的注册费能报销吗", "Can conference registration fees be reimbursed?", "Les frais d'inscription aux conférences sont-ils remboursables ?"),
    ("q14", "校园网什么时候维护", "When will the campus network be maintained?", "Quand le réseau du campus sera-t-il en maintenance ?"),
    ("q15", "购买正版软件怎么报销", "How do I reimburse the purchase of licensed software?", "Comment me faire rembourser l'achat d'un logiciel sous licence ?"),
    ("q16", "野外考察的补助标准是什么", "What is the allowance standard for field investigations?", "Quelle est l'indemnité pour les enquêtes de terrain ?"),
    ("q17", "给校外助研发放劳务费需要什么材料", "What documents are needed to pay service fees to off-campus assistants?", "Quels documents faut-il pour payer des honoraires aux assistants externes ?"),
    ("q18", "出国参会的国际机票怎么报销", "How do I reimburse international flights for overseas conferences?", "Comment rembourser les billets d'avion internationaux pour les conférences à l'étranger ?"),
    ("q19", "讲座在哪个教室举行", "In which room is the seminar held?", "Dans quelle salle se tient le séminaire ?"),
    ("q20", "明天天气怎么样", "What will the weather be like tomorrow?", "Quel temps fera-t-il demain ?"),
]

REFUSAL_ZH = "抱歉，没有找到与您的问题相关的校园资料，暂时无法回答这个问题。建议您换一种问法，或咨询相关部门。"
REFUSAL_EN = "Sorry, I could not find campus materials related to your question, so I cannot answer it for now. Please try rephrasing it, or contact the relevant office."
REFUSAL_FR = "Désolé, je n'ai trouvé aucun document du campus lié à votre question, je ne peux donc pas y répondre pour le moment. Essayez de la reformuler ou contactez le service concerné."

# Localized versions of the extractive answers (draft text = "title\nbody").
CONTENT_TRANSLATIONS = {
    "c-canteen-xinyuan": {
        "en": "Canteen Xinyuan\nCanteen Xinyuan sits in the north part of campus next to the sports field and has two floors. The first floor is a self-service area with a wide range of home-style and seasonal dishes; the second floor has noodle, roast, and halal counters. The menu changes every week and prices are student-friendly.",
        "fr": "Cantine Xinyuan\nLa cantine Xinyuan se trouve au nord du campus, à côté du terrain de sport, et compte deux étages. Le premier étage est un espace en libre-service avec de nombreux plats familiaux et de saison ; le deuxième étage propose des comptoirs de nouilles, de rôtisserie et de cuisine halal. Le menu change chaque semaine et les prix restent abordables.",
    },
    "c-sis": {
        "en": "School of International Studies\nThe School of International Studies offers undergraduate and graduate programs in international politics, diplomacy, and international organizations; its graduates typically join foreign-affairs offices, international organizations, and research institutes.",
        "fr": "École des études internationales\nL'École des études internationales propose des cursus de licence et de master en politique internationale, diplomatie et organisations internationales ; ses diplômés rejoignent généralement des services des affaires étrangères, des organisations internationales et des instituts de recherche.",
    },
    "c-library": {
        "en": "Library\nThe library holds more than eight million printed volumes and offers several reading areas, seminar rooms, and self-study spaces; a campus card is required to enter.",
        "fr": "Bibliothèque\nLa bibliothèque possède plus de huit millions de volumes imprimés et offre plusieurs salles de lecture, salles de séminaire et espaces d'étude ; une carte de campus est nécessaire pour entrer.",
    },
    "q-wired": {
        "en": "How do I connect to the wired campus network in the dormitory?\nApply for a network account at the network service hall, plug the cable into the wall port, then sign in with the account; no other configuration is needed.",
        "fr": "Comment se connecter au réseau filaire du campus dans le dortoir ?\nDemandez un compte au guichet des services réseau, branchez le câble sur la prise murale, puis authentifiez-vous avec le compte ; aucune autre configuration n'est nécessaire.",
    },
    "q-busy": {
        "en": "Which canteen is less crowded?\nYou can check the canteen busy index page to see the real-time crowd level of each dining hall and avoid the peak hours.",
        "fr": "Quelle cantine est la moins fréquentée ?\nVous pouvez consulter la page de l'indice d'affluence des cantines pour connaître la fréquentation en temps réel de chaque restaurant et éviter les heures de pointe.",
    },
    "q-card": {
        "en": "How do I get a campus card?\nAfter booking in the orientation system, new students bring their admission letter and ID to the card service center; the card is issued on the spot.",
        "fr": "Comment obtenir une carte de campus ?\nAprès avoir pris rendez-vous dans le système d'accueil, les nouveaux étudiants apportent leur lettre d'admission et une pièce d'identité au centre des cartes ; la carte est délivrée sur place.",
    },
    "w-vacation-2025": {
        "en": "Notice on the 2025 winter vacation schedule\nThe 2025 winter vacation starts on January 13 and ends on February 21. Students staying on campus need to register in the system in advance; dormitory heating continues as usual.",
        "fr": "Avis sur le calendrier des vacances d'hiver 2025\nLes vacances d'hiver 2025 commencent le 13 janvier et se terminent le 21 février. Les étudiants restant sur le campus doivent s'inscrire à l'avance dans le système ; le chauffage des dortoirs continue normalement.",
    },
    "w-network": {
        "en": "Campus network maintenance notice\nThe core switches will be upgraded this Saturday from 0:00 to 6:00; campus wired and wireless services may be briefly interrupted, please plan ahead.",
        "fr": "Avis de maintenance du réseau du campus\nLes commutateurs principaux seront mis à niveau ce samedi de 0 h à 6 h ; les services filaires et sans fil du campus pourront être brièvement interrompus, veuillez vous organiser à l'avance.",
    },
    "w-seminar": {
        "en": "Talk announcement: the campus data network and smart operations\nTime: May 30 (Thursday) 10:00-11:00. Location: Room B101, Science Building One. Abstract: an overview of how the campus data network architecture has evolved, with smart-operations practice and walkthroughs of common troubleshooting cases.",
        "fr": "Annonce de conférence : le réseau de données du campus et son exploitation intelligente\nHoraire : le 30 mai (jeudi) de 10 h à 11 h. Lieu : salle B101, bâtiment des sciences n°1. Résumé : un aperçu de l'évolution de l'architecture du réseau de données du campus, avec des pratiques d'exploitation intelligente et des exemples de dépannage courants.",
    },
}


def build_phrase_table(corpus_by_id: dict[str, dict]) -> list[dict]:
    pairs = []
    for _qid, zh, en, fr in TRILINGUAL:
        pairs.append({"src_lang": "en", "tgt_lang": "zh", "src": en, "tgt": zh})
        pairs.append({"src_lang": "fr", "tgt_lang": "zh", "src": fr, "tgt": zh})
    for doc_id, translations in CONTENT_TRANSLATIONS.items():
        doc = corpus_by_id[doc_id]
        zh_content = f"{doc['title']}\n{doc['body']}"
        for lang, text in translations.items():
            pairs.append({"src_lang": "zh", "tgt_lang": lang, "src": zh_content, "tgt": text})
    pairs.append({"src_lang": "zh", "tgt_lang": "en", "src": REFUSAL_ZH, "tgt": REFUSAL_EN})
    pairs.append({"src_lang": "zh", "tgt_lang": "fr", "src": REFUSAL_ZH, "tgt": REFUSAL_FR})
    return pairs


# ---------------------------------------------------------------------------
# Lexicon, gazetteer, tools
# ---------------------------------------------------------------------------

LEXICON = (
    [{"surface": s, "pos": "Noun"} for s in [
        "国际关系学院", "新缘食堂", "颐年食堂", "图书馆", "体育馆", "游泳馆", "食堂",
        "开放时间", "校园卡", "校园网", "寒假", "暑假", "讲座", "教室", "教学楼",
        "咖啡厅", "校医院", "菜单", "班车",
        "school of international studies", "canteen xinyuan", "library",
    ]]
    + [{"surface": s, "pos": "Verb"} for s in ["介绍", "开门", "关门", "查询", "办理", "申请", "预约", "introduce"]]
    + [{"surface": s, "role": "clause_marker"} for s in ["因为", "如果", "虽然", "的时候", "以便", "because", "although"]]
)

GAZETTEER = ["新缘食堂", "颐年食堂", "图书馆", "体育馆", "国际关系学院", "理科一号楼", "Canteen Xinyuan", "Canteen Yannan"]

TOOLS = [
    {
        "name": "campus-map",
        "function_desc": "Locate a campus building and open walking navigation to it",
        "primary_application": "Finding buildings, canteens, and other facilities",
        "invocation": {
            "url_template": "https://campus.example/map?q={location_name}",
            "params": [{"name": "location_name", "semantic_type": "location_name"}],
        },
        "keywords": [],
    },
    {
        "name": "canteen-busy-index",
        "function_desc": "Live crowd levels for every canteen on campus",
        "primary_application": "Choosing a canteen and a time with short queues",
        "invocation": {"url_template": "https://campus.example/canteen-busy", "params": []},
        "keywords": ["拥挤指数", "人流量", "人比较少", "crowd", "busy index"],
    },
    {
        "name": "classroom-availability",
        "function_desc": "Search classrooms that are currently free for self-study",
        "primary_application": "Finding an available classroom",
        "invocation": {"url_template": "https://campus.example/classrooms/free", "params": []},
        "keywords": ["空闲教室", "自习教室", "available classroom"],
    },
]

PROMPT_TEMPLATE = """You are a campus information assistant. Answer the question using only the evidence below.
Current time: {current_time}

Question: {query}

Evidence (each item carries the timestamp of its source):
{evidence_blocks}

Rules:
- Weigh the timeliness of each evidence item against the current time and avoid using outdated information; when two items conflict, prefer the newer one and you may note that the older one is outdated.
- Never state facts that are not supported by the evidence.
- Answer concisely in the same language as the question.
"""


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------


def write_jsonl(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def write_lines(path: Path, lines: list[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def main() -> int:
    write_jsonl(ASSETS / "demo" / "corpus.jsonl", CORPUS)
    manifest = {
        "Concept": len(CONCEPTS),
        "QAPair": len(QA_PAIRS),
        "WebPage": len(WEB_PAGES),
        "Tabular": len(TABULAR),
        "total": len(CORPUS),
    }
    (ASSETS / "demo" / "manifest.json").write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False), encoding="utf-8"
    )

    dataset = build_intent_dataset()
    train, test = split_dataset(dataset)
    write_jsonl(ASSETS / "demo" / "intent_train.jsonl", train)
    write_jsonl(ASSETS / "demo" / "intent_test.jsonl", test)

    seeds, eval_set = build_langid_sets()
    for lang, sentences in seeds.items():
        write_lines(ASSETS / "langid" / f"seed_{lang}.txt", sentences)
    write_jsonl(ASSETS / "fixtures" / "langid_eval.jsonl", eval_set)

    write_jsonl(
        ASSETS / "fixtures" / "trilingual_queries.jsonl",
        [
            {"qid": qid, "lang": lang, "text": text}
            for qid, zh, en, fr in TRILINGUAL
            for lang, text in (("zh", zh), ("en", en), ("fr", fr))
        ],
    )

    corpus_by_id = {doc["id"]: doc for doc in CORPUS}
    # Tabular docs carry a rendered body, not a raw one; phrase sources for
    # them would need the rendered Markdown.  Only plain-text docs are
    # covered by the built-in table.
    plain_by_id = {}
    for doc in CORPUS:
        if "body" in doc:
            plain_by_id[doc["id"]] = doc
    write_jsonl(ASSETS / "demo" / "phrase_table.jsonl", build_phrase_table(plain_by_id))

    write_jsonl(ASSETS / "demo" / "lexicon.jsonl", LEXICON)
    write_lines(ASSETS / "demo" / "gazetteer.txt", GAZETTEER)
    write_jsonl(ASSETS / "demo" / "tools.jsonl", TOOLS)
    (ASSETS / "prompt_template.txt").write_text(PROMPT_TEMPLATE, encoding="utf-8")

    print(f"corpus: {len(CORPUS)} docs {manifest}")
    print(f"intent: {len(dataset)} total, {len(train)} train, {len(test)} test")
    print(f"langid: seeds {[f'{k}:{len(v)}' for k, v in seeds.items()]}, eval {len(eval_set)}")
    return run_self_checks()


# ---------------------------------------------------------------------------
# Self-checks (require the package to be installed)
# ---------------------------------------------------------------------------


def run_self_checks() -> int:
    sys.path.insert(0, str(REPO / "src"))
    import numpy as np

    from aloha.intent import IntentClass, build_intent_index, evaluate_intent, hic_candidates, load_examples_jsonl
    from aloha.langid import LanguageFrontdoor
    from aloha.providers import BuiltinTranslator, HashedNgramEmbedder, TranslatorChain

    failures = 0

    def check(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        print(f"  {'OK  ' if ok else 'FAIL'} {name}" + (f" ({detail})" if detail else ""))
        if not ok:
            failures += 1

    print("self-checks:")
    embedder = HashedNgramEmbedder(dim=512)
    train = load_examples_jsonl(ASSETS / "demo" / "intent_train.jsonl")
    test = load_examples_jsonl(ASSETS / "demo" / "intent_test.jsonl")
    index = build_intent_index(train, embedder)

    report = evaluate_intent(index, [(t, l) for _i, t, l in test], k=50)
    check("intent recall@50 == 1.0", report.recall_at_k == 1.0, f"recall={report.recall_at_k:.4f}")
    check("intent accuracy >= 0.9", report.accuracy >= 0.9, f"acc={report.accuracy:.4f}")

    # Gate margins: General-ish queries stay below 0.35, tabular queries above.
    general_queries = ["新缘食堂在哪里", "介绍国际关系学院", "明天天气怎么样", "讲座在哪个教室举行", "校园网什么时候维护"]
    for q in general_queries:
        vec = embedder.embed([q])[0]
        top = hic_candidates(index, vec, k=1).neighbors[0][1]
        check(f"gate: {q} below 0.35", top < 0.35, f"top1={top:.3f}")
    tabular_queries = [
        ("颐年食堂的开放时间是几点", IntentClass.OPENING_SCHEDULE),
        ("我可以报销一等座火车票吗", IntentClass.INTER_CITY_TRANSPORT),
        ("出差住宿费的标准是每晚多少", IntentClass.ACCOMMODATION),
    ]
    from aloha.intent import classify_intent

    for q, expected in tabular_queries:
        prediction = classify_intent(q, index)
        check(
            f"intent: {q} -> {expected.value}",
            prediction.label is expected,
            f"got {prediction.label.value} top1={prediction.candidates.neighbors[0][1]:.3f}",
        )

    # Language detection accuracy on the bundled eval set.
    chain = TranslatorChain(builtin=BuiltinTranslator.from_jsonl(ASSETS / "demo" / "phrase_table.jsonl"))
    frontdoor = LanguageFrontdoor(translator=chain)
    eval_rows = [json.loads(ln) for ln in (ASSETS / "fixtures" / "langid_eval.jsonl").read_text(encoding="utf-8").splitlines() if ln]
    correct = sum(1 for row in eval_rows if frontdoor.detect_language(row["text"]).tag == row["lang"])
    check("langid accuracy >= 0.95", correct / len(eval_rows) >= 0.95, f"{correct}/{len(eval_rows)}")

    # Trilingual queries: detection should route them correctly too.
    tri = [json.loads(ln) for ln in (ASSETS / "fixtures" / "trilingual_queries.jsonl").read_text(encoding="utf-8").splitlines() if ln]
    misdetected = [(r["qid"], r["lang"], frontdoor.detect_language(r["text"]).tag) for r in tri]
    misdetected = [m for m in misdetected if m[1] != m[2]]
    check("trilingual detection all correct", not misdetected, str(misdetected[:5]))

    # End-to-end pipeline spot checks on the demo corpus.
    from aloha.config import Config
    from aloha.service import build_state, handle_chat

    state = build_state(Config())
    wire = handle_chat(state, "Où se trouve la Cantine Xinyuan ?")
    check("fig2: stage ConceptMatch", wire["stage"] == "ConceptMatch", wire["stage"])
    check("fig2: one reference", len(wire["references"]) == 1, str(len(wire["references"])))
    check("fig2: one map link", [l["tool_name"] for l in wire["tool_links"]] == ["campus-map"], str(wire["tool_links"]))
    check("fig2: language fr", wire["language"] == "fr", wire["language"])
    check("fig2: no warnings", wire["warnings"] == [], str(wire["warnings"]))

    wire = handle_chat(state, "颐年食堂的开放时间是几点")
    check("fig3: stage TabularByIntent", wire["stage"] == "TabularByIntent", wire["stage"])

    wire = handle_chat(state, "寒假什么时候开始")
    check("timeliness: cites 2025 page", [r["doc_id"] for r in wire["references"]] == ["w-vacation-2025"], str(wire["references"]))

    wire = handle_chat(state, "xqzzk vfplm wwte")
    check("gibberish: stage None + refusal", wire["stage"] == "None" and "NoEvidence" in wire["warnings"], wire["stage"])

    wire = handle_chat(state, "哪个食堂人比较少")
    check("busy: busy-index link", any(l["tool_name"] == "canteen-busy-index" for l in wire["tool_links"]), str(wire["tool_links"]))

    wire = handle_chat(state, "学生宿舍如何接入有线校园网")
    check("qa: stage QAPairs", wire["stage"] == "QAPairs", wire["stage"])

    print(f"self-checks: {'ALL OK' if failures == 0 else f'{failures} FAILURES'}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
