"""Small Spider-style SQLite databases for demos and offline tests.

``build_demo_databases(dir)`` writes twenty single-file databases.  Row
counts that the tests rely on: 3 singers, 5 employees, 3 hospitals in
Seattle, and Los Angeles spelled ``'LA'`` in ``restaurant.location``.
"""

from __future__ import annotations

import os
import sqlite3
from pathlib import Path

from .catalog import Catalog

# db_id -> list of (DDL, rows)
DEMO_DATABASES: dict[str, list[tuple[str, list[tuple]]]] = {
    "restaurant": [
        (
            "CREATE TABLE restaurant (id INTEGER PRIMARY KEY, name TEXT, location TEXT, food_type TEXT, rating REAL)",
            [
                (1, "Thai Palace", "New York", "thai", 4.5),
                (2, "Siam Garden", "New York", "thai", 4.1),
                (3, "Golden Dragon", "LA", "chinese", 3.9),
                (4, "Taco Loco", "LA", "mexican", 4.2),
                (5, "Bay Bistro", "SF", "american", 4.0),
                (6, "Pho Saigon", "SF", "vietnamese", 3.7),
                (7, "Bangkok Kitchen", "LA", "thai", 4.4),
                (8, "Big Apple Pizza", "New York", "italian", 3.5),
            ],
        ),
    ],
    "singer": [
        (
            "CREATE TABLE singer (singer_id INTEGER PRIMARY KEY, name TEXT, birth_year INTEGER, net_worth_millions REAL, citizenship TEXT)",
            [
                (1, "Liliane Bettencourt", 1944, 30.0, "France"),
                (2, "Christy Walton", 1948, 28.8, "United States"),
                (3, "Alice Walton", 1949, 26.3, "United States"),
            ],
        ),
        (
            "CREATE TABLE song (song_id INTEGER PRIMARY KEY, title TEXT, singer_id INTEGER REFERENCES singer(singer_id), sales REAL)",
            [(1, "Do They Know It's Christmas", 1, 1094000.0), (2, "F**k It", 2, 552407.0), (3, "Cha Cha Slide", 3, 351421.0)],
        ),
    ],
    "employee_hire_evaluation": [
        (
            "CREATE TABLE employee (employee_id INTEGER PRIMARY KEY, name TEXT, age INTEGER, city TEXT)",
            [
                (1, "George Chuter", 23, "Bristol"),
                (2, "Lee Mears", 29, "Bath"),
                (3, "Mark Regan", 43, "Bristol"),
                (4, "Jason Hobson", 30, "Bristol"),
                (5, "Tim Payne", 29, "Wasps"),
            ],
        ),
        (
            "CREATE TABLE shop (shop_id INTEGER PRIMARY KEY, name TEXT, location TEXT, district TEXT, number_products INTEGER)",
            [(1, "FC Haka", "Valkeakoski", "Tehtaan kenttä", 3516), (2, "HJK", "Helsinki", "Finnair Stadium", 10770)],
        ),
        (
            "CREATE TABLE hiring (shop_id INTEGER REFERENCES shop(shop_id), employee_id INTEGER PRIMARY KEY REFERENCES employee(employee_id), start_from TEXT, is_full_time TEXT)",
            [(1, 1, "2009", "T"), (1, 2, "2003", "T"), (2, 3, "2011", "F")],
        ),
        (
            "CREATE TABLE evaluation (employee_id TEXT REFERENCES employee(employee_id), year_awarded TEXT, bonus REAL, PRIMARY KEY (employee_id, year_awarded))",
            [("1", "2011", 3000.0), ("2", "2015", 3200.0)],
        ),
    ],
    "city": [
        (
            "CREATE TABLE city (city_id INTEGER PRIMARY KEY, name TEXT, state TEXT, population INTEGER, area_km2 REAL)",
            [
                (1, "Seattle", "Washington", 737015, 217.0),
                (2, "Portland", "Oregon", 652503, 376.5),
                (3, "Spokane", "Washington", 228989, 156.5),
            ],
        ),
    ],
    "hospital": [
        (
            "CREATE TABLE hospital (hospital_id INTEGER PRIMARY KEY, name TEXT, city TEXT, beds INTEGER)",
            [
                (1, "Harborview Medical Center", "Seattle", 413),
                (2, "Swedish First Hill", "Seattle", 697),
                (3, "Virginia Mason", "Seattle", 336),
                (4, "Legacy Emanuel", "Portland", 554),
                (5, "Providence Portland", "Portland", 483),
            ],
        ),
    ],
    "pets_1": [
        (
            "CREATE TABLE student (stuid INTEGER PRIMARY KEY, lname TEXT, fname TEXT, age INTEGER, major INTEGER)",
            [(1001, "Smith", "Linda", 18, 600), (1002, "Kim", "Tracy", 19, 600), (1003, "Jones", "Shiela", 21, 600)],
        ),
        (
            "CREATE TABLE pets (petid INTEGER PRIMARY KEY, pettype TEXT, pet_age INTEGER, weight REAL)",
            [(2001, "cat", 3, 12.0), (2002, "dog", 2, 13.4), (2003, "dog", 1, 9.3)],
        ),
        (
            "CREATE TABLE has_pet (stuid INTEGER REFERENCES student(stuid), petid INTEGER REFERENCES pets(petid))",
            [(1001, 2001), (1002, 2002), (1002, 2003)],
        ),
    ],
    "car_1": [
        (
            "CREATE TABLE countries (countryid INTEGER PRIMARY KEY, countryname TEXT, continent INTEGER)",
            [(1, "usa", 1), (2, "germany", 2), (3, "france", 2), (4, "japan", 3)],
        ),
        (
            "CREATE TABLE car_makers (id INTEGER PRIMARY KEY, maker TEXT, fullname TEXT, country INTEGER REFERENCES countries(countryid))",
            [(1, "amc", "American Motor Company", 1), (2, "volkswagen", "Volkswagen", 2), (3, "bmw", "BMW", 2), (4, "toyota", "Toyota", 4)],
        ),
    ],
    "flight_2": [
        (
            "CREATE TABLE airlines (uid INTEGER PRIMARY KEY, airline TEXT, abbreviation TEXT, country TEXT)",
            [(1, "United Airlines", "UAL", "USA"), (2, "US Airways", "USAir", "USA"), (3, "Delta Airlines", "Delta", "USA")],
        ),
        (
            "CREATE TABLE flights (airline INTEGER REFERENCES airlines(uid), flightno INTEGER, sourceairport TEXT, destairport TEXT)",
            [(1, 28, "APG", "ASY"), (1, 29, "ASY", "APG"), (2, 44, "CVO", "ACV")],
        ),
    ],
    "museum_visit": [
        (
            "CREATE TABLE museum (museum_id INTEGER PRIMARY KEY, name TEXT, num_of_staff INTEGER, open_year TEXT)",
            [(1, "Plaza Museum", 62, "2000"), (2, "Capital Plaza Museum", 25, "2012"), (3, "Jefferson Development Museum", 18, "2010")],
        ),
        (
            "CREATE TABLE visitor (id INTEGER PRIMARY KEY, name TEXT, level_of_membership INTEGER, age INTEGER)",
            [(1, "Gonzalo Higuaín", 8, 35), (2, "Guti Midfielder", 5, 28)],
        ),
    ],
    "school_bus": [
        (
            "CREATE TABLE school (school_id INTEGER PRIMARY KEY, grade TEXT, school TEXT, location TEXT, type TEXT)",
            [(1, "Kindergarten", "Noelani Elementary School", "Honolulu, Hawaii", "Public"), (2, "1st-3rd grade", "St. Francis Assisi", "Jakarta, Indonesia", "Private Catholic")],
        ),
        (
            "CREATE TABLE driver (driver_id INTEGER PRIMARY KEY, name TEXT, party TEXT, home_city TEXT, age INTEGER)",
            [(1, "Matthew Ritter", "Dem", "Hartford", 40), (2, "Dan Carter", "Rep", "Bethel", 30)],
        ),
    ],
    "book_2": [
        (
            "CREATE TABLE book (book_id INTEGER PRIMARY KEY, title TEXT, issues REAL, writer TEXT)",
            [(1, "The Black Lamb", 6.0, "Timothy Truman"), (2, "Bloody Mary", 4.0, "Garth Ennis")],
        ),
        (
            "CREATE TABLE publication (publication_id INTEGER PRIMARY KEY, book_id INTEGER REFERENCES book(book_id), publisher TEXT, price REAL)",
            [(1, 1, "Pearson", 15000000.0), (2, 2, "Thomson Reuters", 6000000.0)],
        ),
    ],
    "bank": [
        (
            "CREATE TABLE customer (cust_id TEXT PRIMARY KEY, cust_name TEXT, acc_type TEXT, acc_bal INTEGER, state TEXT)",
            [("1", "Mary", "saving", 2000, "Utah"), ("2", "Jack", "checking", 1000, "Texas"), ("3", "Owen", "saving", 800000, "New York")],
        ),
    ],
    "weather": [
        (
            "CREATE TABLE station (id INTEGER PRIMARY KEY, network_name TEXT, services TEXT, local_authority TEXT)",
            [(1, "Amersham", "Metropolitan line and Chiltern Railways", "Chiltern"), (2, "Bushey", "London Overground and London Midland", "Watford")],
        ),
        (
            "CREATE TABLE weekly_weather (station_id INTEGER REFERENCES station(id), day_of_week TEXT, high_temperature INTEGER, low_temperature INTEGER, precipitation REAL)",
            [(1, "Monday", 59, 54, 90.0), (1, "Tuesday", 66, 55, 20.0)],
        ),
    ],
    "orchestra": [
        (
            "CREATE TABLE conductor (conductor_id INTEGER PRIMARY KEY, name TEXT, age INTEGER, nationality TEXT, year_of_work INTEGER)",
            [(1, "Antal Doráti", 40, "USA", 10), (2, "Igor Stravinsky", 41, "UK", 11)],
        ),
        (
            "CREATE TABLE orchestra (orchestra_id INTEGER PRIMARY KEY, orchestra TEXT, conductor_id INTEGER REFERENCES conductor(conductor_id), record_company TEXT, year_of_founded REAL)",
            [(1, "London Symphony Orchestra", 1, "Mercury Records", 2003.0)],
        ),
    ],
    "poker_player": [
        (
            "CREATE TABLE people (people_id INTEGER PRIMARY KEY, nationality TEXT, name TEXT, birth_date TEXT, height REAL)",
            [(1, "Russia", "Aleksey Ostapenko", "May 26, 1986", 207.0), (2, "Bulgaria", "Teodor Salparov", "August 16, 1982", 182.0)],
        ),
        (
            "CREATE TABLE poker_player (poker_player_id INTEGER PRIMARY KEY, people_id INTEGER REFERENCES people(people_id), final_table_made REAL, best_finish REAL, money_rank REAL, earnings REAL)",
            [(1, 1, 42.0, 1.0, 68.0, 476090.0)],
        ),
    ],
    "tvshow": [
        (
            "CREATE TABLE tv_channel (id TEXT PRIMARY KEY, series_name TEXT, country TEXT, language TEXT)",
            [("700", "Sky Radio", "Italy", "Italian"), ("701", "Sky Music", "Italy", "Italian")],
        ),
        (
            "CREATE TABLE cartoon (id INTEGER PRIMARY KEY, title TEXT, directed_by TEXT, channel TEXT REFERENCES tv_channel(id))",
            [(1, "The Rise of the Blue Beetle!", "Ben Jones", "700")],
        ),
    ],
    "dog_kennels": [
        (
            "CREATE TABLE owners (owner_id INTEGER PRIMARY KEY, first_name TEXT, last_name TEXT, city TEXT)",
            [(1, "Nora", "Haley", "Lake Tia"), (2, "Melisa", "DuBuque", "Port Reannamouth")],
        ),
        (
            "CREATE TABLE dogs (dog_id INTEGER PRIMARY KEY, owner_id INTEGER REFERENCES owners(owner_id), name TEXT, breed_code TEXT, age TEXT)",
            [(1, 1, "Kacey", "ESK", "6"), (2, 2, "Hipolito", "BUL", "9")],
        ),
    ],
    "wta_1": [
        (
            "CREATE TABLE players (player_id INTEGER PRIMARY KEY, first_name TEXT, last_name TEXT, hand TEXT, country_code TEXT)",
            [(200001, "Martina", "Hingis", "R", "SUI"), (200002, "Mirjana", "Lucic", "R", "CRO")],
        ),
        (
            "CREATE TABLE rankings (ranking_date INTEGER, ranking INTEGER, player_id INTEGER REFERENCES players(player_id), ranking_points INTEGER)",
            [(20000101, 3, 200001, 4378)],
        ),
    ],
    "battle_death": [
        (
            "CREATE TABLE battle (id INTEGER PRIMARY KEY, name TEXT, date TEXT, bulgarian_commander TEXT, latin_commander TEXT, result TEXT)",
            [(1, "Battle of Adrianople", "14 April 1205", "Kaloyan", "Baldwin I", "Bulgarian victory")],
        ),
        (
            "CREATE TABLE ship (id INTEGER PRIMARY KEY, lost_in_battle INTEGER REFERENCES battle(id), name TEXT, tonnage TEXT, ship_type TEXT)",
            [(1, 1, "Lettice", "t", "Brig")],
        ),
    ],
    "course_teach": [
        (
            "CREATE TABLE course (course_id INTEGER PRIMARY KEY, staring_date TEXT, course TEXT)",
            [(1, "5 May", "Language Arts"), (2, "6 May", "Math")],
        ),
        (
            "CREATE TABLE teacher (teacher_id INTEGER PRIMARY KEY, name TEXT, age TEXT, hometown TEXT)",
            [(1, "Joseph Huts", "32", "Blackrod Urban District"), (2, "Gustaaf Deloor", "29", "Bolton County Borough")],
        ),
    ],
}


def build_database(path: str | os.PathLike, tables: list[tuple[str, list[tuple]]]) -> Path:
    path = Path(path)
    if path.exists():
        path.unlink()
    conn = sqlite3.connect(path)
    try:
        for ddl, rows in tables:
            conn.execute(ddl)
            if rows:
                table = ddl.split()[2]
                marks = ", ".join("?" * len(rows[0]))
                conn.executemany(f"INSERT INTO {table} VALUES ({marks})", rows)
        conn.commit()
    finally:
        conn.close()
    return path


def build_demo_databases(directory: str | os.PathLike, ids: list[str] | None = None) -> dict[str, Path]:
    """Write the demo databases into ``directory`` and return ``{db_id: path}``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = {}
    for db_id in ids or list(DEMO_DATABASES):
        out[db_id] = build_database(directory / f"{db_id}.sqlite", DEMO_DATABASES[db_id])
    return out


def demo_catalog(directory: str | os.PathLike, ids: list[str] | None = None) -> Catalog:
    catalog = Catalog()
    for db_id, path in build_demo_databases(directory, ids).items():
        catalog.register_database(path, db_id)
    return catalog


if __name__ == "__main__":
    import sys

    target = sys.argv[1] if len(sys.argv) > 1 else "demo_dbs"
    for db_id, path in build_demo_databases(target).items():
        print(f"{db_id}\t{path}")
