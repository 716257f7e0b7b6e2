use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PredefinedQuery {
    pub name: &'static str,
    pub description: &'static str,
    pub sql: &'static str,
}

pub const RECENT_PRODUCTS_CUTTING: PredefinedQuery = PredefinedQuery {
    name: "recent-products-cutting",
    description: "Average temperature and noise on the Cutting Machine while each of the \
                  10 most recently finished products was being worked on",
    sql: "SELECT h.ID AS PRODUCTION_ORDER_ID, h.PRODUCT_ID, p.LEFT_AT,
       AVG(s.TEMPERATURE_VALUE) AS AVG_TEMP, AVG(s.NOISE_VALUE) AS AVG_NOISE
FROM PRODUCTION_ORDER_POSITION p
JOIN PRODUCTION_ORDER_HEAD h ON p.HEAD_ID = h.ID
JOIN WORKPLACE w ON p.WORKPLACE_ID = w.ID
JOIN SENSOR_DATA s ON s.WORKPLACE_ID = p.WORKPLACE_ID AND s.DATE BETWEEN p.ENTERED_AT AND p.LEFT_AT
WHERE w.NAME = 'Cutting Machine'
GROUP BY h.ID, h.PRODUCT_ID, p.LEFT_AT
ORDER BY p.LEFT_AT DESC
LIMIT 10",
};

pub const VIBRATION_BY_SUPPLIER: PredefinedQuery = PredefinedQuery {
    name: "vibration-by-supplier",
    description: "Average vibration at the Assembly workplace per supplier of the material \
                  used by the production order",
    sql: "SELECT sup.NAME AS SUPPLIER, AVG(s.VIBRATION_VALUE) AS AVG_VIBRATION
FROM SENSOR_DATA s
JOIN PRODUCTION_ORDER_POSITION p ON s.WORKPLACE_ID = p.WORKPLACE_ID AND s.DATE BETWEEN p.ENTERED_AT AND p.LEFT_AT
JOIN WORKPLACE w ON p.WORKPLACE_ID = w.ID
JOIN PRODUCTION_ORDER_HEAD h ON p.HEAD_ID = h.ID
JOIN PURCHASE_ORDER_ITEM poi ON h.PURCHASE_ORDER_ITEM_ID = poi.ID
JOIN PURCHASE_ORDER_HEAD poh ON poi.HEAD_ID = poh.ID
JOIN SUPPLIER sup ON poh.SUPPLIER_ID = sup.ID
WHERE w.NAME = 'Assembly'
GROUP BY sup.NAME
ORDER BY sup.NAME",
};

/// The two sample queries shipped with the application.
pub fn predefined() -> [PredefinedQuery; 2] {
    [RECENT_PRODUCTS_CUTTING, VIBRATION_BY_SUPPLIER]
}
